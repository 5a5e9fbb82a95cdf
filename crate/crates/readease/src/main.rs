//! `readease`: corpus readability analytics from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use readease::pipeline::{self, PipelineConfig, PipelineError, Predictor, RunSummary};
use readease::score::HashtagPolicy;
use readease::stats::{BinSpec, DEFAULT_SE_FLOOR};
use readease::{corpus::CorpusFormat, geo};

#[derive(Parser)]
#[command(
    name = "readease",
    version,
    about = "Readability scoring and geographic aggregation for short-message corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score each message and write scores.csv.
    Score {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Bin the `re` column of an existing scores.csv into histogram.csv.
    Histogram {
        /// scores.csv produced by `score` or `pipeline`.
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, value_parser = parse_bins, default_value = "-50:130:2", allow_hyphen_values = true)]
        bins: BinSpec,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Measure per-message score shift from dropping hashtag tokens.
    HashtagDelta {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Delta histogram bounds as LO:HI:WIDTH.
        #[arg(long, value_parser = parse_bins, default_value = "-60:120:2", allow_hyphen_values = true)]
        delta_bins: BinSpec,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Group scored messages by nearest ZCTA centroid and write
    /// zcta_aggregates.csv.
    GeoAggregate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        geo: GeoArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fit mean readability against an education column from existing
    /// aggregates.
    Regress {
        /// zcta_aggregates.csv produced by `geo-aggregate` or `pipeline`.
        #[arg(long)]
        aggregates: PathBuf,
        /// Education table (zcta,pct_hs,pct_bachelors).
        #[arg(long)]
        education: PathBuf,
        #[arg(long, value_enum, default_value_t = PredictorArg::Bachelors)]
        predictor: PredictorArg,
        /// Smallest group size included in the headline fit.
        #[arg(long, default_value_t = geo::DEFAULT_MIN_COUNT)]
        min_count: u64,
        /// Lower limit applied to per-group standard errors before
        /// weighting.
        #[arg(long, default_value_t = DEFAULT_SE_FLOOR)]
        se_floor: f64,
        /// Predictor bin width for binned_medians.csv and density_grid.csv.
        #[arg(long, default_value_t = 5.0)]
        median_bin_width: f64,
        /// Readability histogram bounds for the density grid.
        #[arg(long, value_parser = parse_bins, default_value = "-50:130:2", allow_hyphen_values = true)]
        bins: BinSpec,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run every stage: score, histograms, hashtag deltas, ZCTA
    /// aggregation, regression, summary.
    Pipeline {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        geo: GeoArgs,
        /// Education table; enables the regression stage.
        #[arg(long)]
        education: Option<PathBuf>,
        /// Readability histogram bounds as LO:HI:WIDTH.
        #[arg(long, value_parser = parse_bins, default_value = "-50:130:2", allow_hyphen_values = true)]
        bins: BinSpec,
        /// Delta histogram bounds as LO:HI:WIDTH.
        #[arg(long, value_parser = parse_bins, default_value = "-60:120:2", allow_hyphen_values = true)]
        delta_bins: BinSpec,
        #[arg(long, default_value_t = 5.0)]
        median_bin_width: f64,
        #[arg(long, default_value_t = DEFAULT_SE_FLOOR)]
        se_floor: f64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
struct CorpusArgs {
    /// Input corpus file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Jsonl)]
    format: FormatArg,
    /// Keep only messages with this exact language tag; `none` keeps all.
    #[arg(long, default_value = "en")]
    lang: String,
    /// Whether hashtag tokens count toward the score.
    #[arg(long, value_enum, default_value_t = PolicyArg::Exclude)]
    hashtags: PolicyArg,
    /// Worker threads; 0 uses all cores, 1 forces the sequential path.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct GeoArgs {
    /// ZCTA centroid table (GEOID,INTPTLAT,INTPTLONG).
    #[arg(long)]
    centroids: Option<PathBuf>,
    /// Assignment cutoff in coordinate degrees.
    #[arg(long, default_value_t = geo::DEFAULT_THRESHOLD_DEGREES, allow_negative_numbers = true)]
    geo_threshold: f64,
    /// Smallest group size kept in zcta_aggregates.csv.
    #[arg(long, default_value_t = geo::DEFAULT_MIN_COUNT)]
    min_count: u64,
}

#[derive(Args)]
struct OutArgs {
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Jsonl,
    Lines,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Exclude,
    Include,
}

#[derive(Clone, Copy, ValueEnum)]
enum PredictorArg {
    Bachelors,
    Hs,
}

fn parse_bins(s: &str) -> Result<BinSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let &[lo, hi, width] = parts.as_slice() else {
        return Err(format!("expected LO:HI:WIDTH, got {s:?}"));
    };
    let num = |v: &str, what: &str| {
        v.parse::<f64>()
            .map_err(|_| format!("cannot parse {what} {v:?}"))
    };
    BinSpec::new(num(lo, "lower bound")?, num(hi, "upper bound")?, num(width, "width")?)
        .map_err(|e| e.to_string())
}

fn build_config(corpus: CorpusArgs, out: OutArgs) -> PipelineConfig {
    let mut config = PipelineConfig::new(corpus.input, out.out);
    config.format = match corpus.format {
        FormatArg::Jsonl => CorpusFormat::Jsonl,
        FormatArg::Lines => CorpusFormat::Lines,
    };
    config.lang = (corpus.lang != "none").then_some(corpus.lang);
    config.policy = match corpus.hashtags {
        PolicyArg::Exclude => HashtagPolicy::Exclude,
        PolicyArg::Include => HashtagPolicy::Include,
    };
    config.workers = corpus.workers;
    config
}

fn print_summary(s: &RunSummary) {
    println!(
        "read {} messages ({} malformed, {} filtered by lang)",
        s.counts.read, s.counts.skipped_malformed, s.counts.lang_filtered
    );
    match s.mean_re {
        Some(mean) => println!(
            "scored {} ({} without countable words), mean score {mean:.3}",
            s.counts.scored, s.counts.null_score
        ),
        None => println!(
            "scored {} ({} without countable words)",
            s.counts.scored, s.counts.null_score
        ),
    }
    println!(
        "hashtag messages {}, deltas {}",
        s.counts.hashtag_messages, s.counts.delta_rows
    );
    if let Some(geo) = &s.geo {
        println!(
            "geo: assigned {}, unassigned {}, groups kept {} of {} ({} messages below min-count)",
            geo.assigned,
            geo.unassigned,
            geo.groups_kept,
            geo.groups_total,
            geo.below_min_count_messages
        );
    }
    if s.regression != "skipped: not requested" {
        println!("regression: {}", s.regression);
    }
    println!(
        "elapsed {:.3}s ({:.0} messages/s)",
        s.elapsed_seconds, s.messages_per_second
    );
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Score { corpus, out } => {
            let summary = pipeline::run_score(&build_config(corpus, out))?;
            print_summary(&summary);
        }
        Command::Histogram { scores, bins, out } => {
            let hist = pipeline::run_histogram(&scores, bins, &out.out)?;
            println!(
                "binned {} values ({} underflow, {} overflow)",
                hist.total(),
                hist.underflow(),
                hist.overflow()
            );
        }
        Command::HashtagDelta {
            corpus,
            delta_bins,
            out,
        } => {
            let mut config = build_config(corpus, out);
            config.delta_bins = delta_bins;
            let summary = pipeline::run_hashtag_delta(&config)?;
            print_summary(&summary);
        }
        Command::GeoAggregate { corpus, geo, out } => {
            let mut config = build_config(corpus, out);
            config.centroids = geo.centroids;
            config.geo_threshold = geo.geo_threshold;
            config.min_count = geo.min_count;
            let summary = pipeline::run_geo_aggregate(&config)?;
            print_summary(&summary);
        }
        Command::Regress {
            aggregates,
            education,
            predictor,
            min_count,
            se_floor,
            median_bin_width,
            bins,
            out,
        } => {
            let predictor = match predictor {
                PredictorArg::Bachelors => Predictor::Bachelors,
                PredictorArg::Hs => Predictor::HighSchool,
            };
            let report = pipeline::run_regress(
                &aggregates,
                &education,
                predictor,
                se_floor,
                min_count,
                median_bin_width,
                bins,
                &out.out,
            )?;
            match (report.fit.slope, report.fit.slope_se) {
                (Some(slope), Some(se)) => println!(
                    "fit over {} groups: slope {slope:.4} (se {se:.4}) per point of {}",
                    report.fit.n_zcta, report.predictor
                ),
                _ => println!(
                    "no fit: {} groups at min-count {}",
                    report.fit.n_zcta, report.fit.min_count
                ),
            }
        }
        Command::Pipeline {
            corpus,
            geo,
            education,
            bins,
            delta_bins,
            median_bin_width,
            se_floor,
            out,
        } => {
            let mut config = build_config(corpus, out);
            config.centroids = geo.centroids;
            config.geo_threshold = geo.geo_threshold;
            config.min_count = geo.min_count;
            config.education = education;
            config.re_bins = bins;
            config.delta_bins = delta_bins;
            config.median_bin_width = median_bin_width;
            config.se_floor = se_floor;
            let summary = pipeline::run_pipeline(&config)?;
            print_summary(&summary);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
