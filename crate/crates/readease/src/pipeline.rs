//! The end-to-end corpus pipeline and its standalone stages.
//!
//! Messages stream through a single pass that scores, bins, measures hashtag
//! deltas, and folds geo-tagged scores into per-ZCTA accumulators. The
//! stream is cut into fixed-size chunks; chunks are processed independently
//! (in parallel when the `parallel` feature is on and more than one worker
//! is available) and their partial results merged back in chunk order.
//! Because chunk boundaries and merge order never depend on the worker
//! count, a run's outputs are identical whatever `workers` is set to.
//!
//! Memory stays bounded: at most one wave of [`WAVE_CHUNKS`] chunks is in
//! flight, and per-message rows are flushed to their writers between waves.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::census::{self, CensusError, EducationTable};
use crate::corpus::{self, CorpusError, CorpusFormat, Message, MessageReader};
use crate::geo::{self, GeoError, ZctaIndex};
use crate::score::{score_both, HashtagPolicy};
use crate::stats::{
    binned_medians, density_grid, weighted_least_squares, BinSpec, Histogram, RunningStats,
    StatsError, WlsPoint, ZctaAggregate, DEFAULT_SE_FLOOR,
};

/// Messages per chunk. Fixed so that results cannot depend on worker count.
const CHUNK: usize = 4096;
/// Chunks per wave; one wave is the most the pass holds in memory.
const WAVE_CHUNKS: usize = 64;

/// Thresholds reported in the regression sweep.
pub const SWEEP_MIN_COUNTS: [u64; 4] = [1, 5, 10, 20];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Census(#[from] CensusError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("failed to write {path:?}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("failed to read {path:?}: {message}")]
    ReadInput { path: PathBuf, message: String },
}

impl PipelineError {
    /// Process exit code: 2 for configuration mistakes, 1 for input or I/O
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            _ => 1,
        }
    }
}

fn write_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Write {
        path: path.to_owned(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> PipelineError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => PipelineError::Write {
            path: path.to_owned(),
            source,
        },
        other => PipelineError::ReadInput {
            path: path.to_owned(),
            message: format!("{other:?}"),
        },
    }
}

/// Full pipeline configuration; [`PipelineConfig::new`] fills in the
/// defaults for everything but the input and output paths.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub format: CorpusFormat,
    /// Exact-match language filter; `None` disables filtering.
    pub lang: Option<String>,
    pub policy: HashtagPolicy,
    pub centroids: Option<PathBuf>,
    pub education: Option<PathBuf>,
    pub min_count: u64,
    pub geo_threshold: f64,
    pub re_bins: BinSpec,
    pub delta_bins: BinSpec,
    pub median_bin_width: f64,
    pub se_floor: f64,
    /// 0 uses all available cores; 1 forces the sequential path.
    pub workers: usize,
    pub out_dir: PathBuf,
}

impl PipelineConfig {
    pub fn new(input: PathBuf, out_dir: PathBuf) -> Self {
        Self {
            input,
            format: CorpusFormat::Jsonl,
            lang: Some("en".to_owned()),
            policy: HashtagPolicy::Exclude,
            centroids: None,
            education: None,
            min_count: geo::DEFAULT_MIN_COUNT,
            geo_threshold: geo::DEFAULT_THRESHOLD_DEGREES,
            re_bins: default_re_bins(),
            delta_bins: default_delta_bins(),
            median_bin_width: 5.0,
            se_floor: DEFAULT_SE_FLOOR,
            workers: 0,
            out_dir,
        }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if !self.geo_threshold.is_finite() || self.geo_threshold < 0.0 {
            return Err(PipelineError::Config(format!(
                "geo threshold must be a non-negative number of degrees, got {}",
                self.geo_threshold
            )));
        }
        if self.min_count == 0 {
            return Err(PipelineError::Config(
                "min-count must be at least 1".to_owned(),
            ));
        }
        if !self.se_floor.is_finite() || self.se_floor <= 0.0 {
            return Err(PipelineError::Config(format!(
                "se floor must be positive, got {}",
                self.se_floor
            )));
        }
        BinSpec::new(0.0, 100.0, self.median_bin_width).map_err(|_| {
            PipelineError::Config(format!(
                "median bin width must be positive, got {}",
                self.median_bin_width
            ))
        })?;
        Ok(())
    }

    fn pass_options(&self, collect_rows: bool, collect_deltas: bool) -> PassOptions {
        PassOptions {
            policy: self.policy,
            lang: self.lang.clone(),
            geo_threshold: self.geo_threshold,
            re_bins: self.re_bins,
            delta_bins: self.delta_bins,
            workers: self.workers,
            collect_rows,
            collect_deltas,
        }
    }
}

/// Score histogram bounds: reading-ease values live in roughly [-50, 130].
pub fn default_re_bins() -> BinSpec {
    BinSpec::new(-50.0, 130.0, 2.0).expect("constant spec")
}

/// Hashtag-delta histogram bounds.
pub fn default_delta_bins() -> BinSpec {
    BinSpec::new(-60.0, 120.0, 2.0).expect("constant spec")
}

/// One scores.csv row.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub id: String,
    pub re: f64,
    pub word_count: u32,
    pub syllable_count: u32,
}

/// One hashtag_delta.csv row.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRow {
    pub id: String,
    pub delta: f64,
}

/// Options for the single streaming pass over a corpus.
#[derive(Debug, Clone)]
pub struct PassOptions {
    pub policy: HashtagPolicy,
    pub lang: Option<String>,
    pub geo_threshold: f64,
    pub re_bins: BinSpec,
    pub delta_bins: BinSpec,
    pub workers: usize,
    /// Build [`ScoreRow`]s and feed them to the row sink.
    pub collect_rows: bool,
    /// Build [`DeltaRow`]s and feed them to the delta sink.
    pub collect_deltas: bool,
}

impl Default for PassOptions {
    fn default() -> Self {
        Self {
            policy: HashtagPolicy::Exclude,
            lang: Some("en".to_owned()),
            geo_threshold: geo::DEFAULT_THRESHOLD_DEGREES,
            re_bins: default_re_bins(),
            delta_bins: default_delta_bins(),
            workers: 0,
            collect_rows: true,
            collect_deltas: true,
        }
    }
}

/// Counters maintained across the pass:
/// `read = (scored + null_score) + skipped_malformed + lang_filtered`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PassCounts {
    /// Lines consumed from the input.
    pub read: u64,
    /// Malformed lines skipped by the reader.
    pub skipped_malformed: u64,
    /// Messages dropped by the language filter.
    pub lang_filtered: u64,
    /// Messages with a defined score.
    pub scored: u64,
    /// Messages with no countable words, discarded.
    pub null_score: u64,
    /// Messages containing at least one hashtag token.
    pub hashtag_messages: u64,
    /// Messages with a defined hashtag delta.
    pub delta_rows: u64,
    /// Scored messages carrying coordinates.
    pub geo_scored: u64,
    /// Geo-tagged scored messages beyond the threshold of every centroid.
    pub unassigned: u64,
}

/// Everything the streaming pass accumulates.
pub struct PassOutput {
    pub re_hist: Histogram,
    pub delta_hist: Histogram,
    pub overall: RunningStats,
    /// Per-ZCTA accumulators for every group with at least one member,
    /// sorted by id. Empty when no index was supplied.
    pub zcta: Vec<ZctaAggregate>,
    pub counts: PassCounts,
}

struct ChunkOut {
    rows: Vec<ScoreRow>,
    deltas: Vec<DeltaRow>,
    re_hist: Histogram,
    delta_hist: Histogram,
    overall: RunningStats,
    zcta: Vec<(u32, RunningStats)>,
    scored: u64,
    null_score: u64,
    hashtag_messages: u64,
    geo_scored: u64,
    unassigned: u64,
}

struct Pass<'a> {
    opts: &'a PassOptions,
    index: Option<&'a ZctaIndex>,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl<'a> Pass<'a> {
    fn new(opts: &'a PassOptions, index: Option<&'a ZctaIndex>) -> Result<Self, PipelineError> {
        #[cfg(feature = "parallel")]
        let pool = match opts.workers {
            0 | 1 => None,
            n => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| PipelineError::Config(format!("cannot start {n} workers: {e}")))?,
            ),
        };
        Ok(Self {
            opts,
            index,
            #[cfg(feature = "parallel")]
            pool,
        })
    }

    fn chunk(&self, messages: &[Message]) -> ChunkOut {
        let mut out = ChunkOut {
            rows: Vec::new(),
            deltas: Vec::new(),
            re_hist: Histogram::new(self.opts.re_bins),
            delta_hist: Histogram::new(self.opts.delta_bins),
            overall: RunningStats::new(),
            zcta: Vec::new(),
            scored: 0,
            null_score: 0,
            hashtag_messages: 0,
            geo_scored: 0,
            unassigned: 0,
        };
        let mut zcta: std::collections::HashMap<u32, RunningStats> = Default::default();
        for m in messages {
            let both = score_both(&m.text);
            if both.has_hashtag {
                out.hashtag_messages += 1;
                if let (Some(ex), Some(inc)) = (both.exclude, both.include) {
                    let delta = ex.re - inc.re;
                    out.delta_hist.add(delta);
                    if self.opts.collect_deltas {
                        out.deltas.push(DeltaRow {
                            id: m.id.clone(),
                            delta,
                        });
                    }
                }
            }
            let score = match self.opts.policy {
                HashtagPolicy::Exclude => both.exclude,
                HashtagPolicy::Include => both.include,
            };
            let Some(score) = score else {
                out.null_score += 1;
                continue;
            };
            out.scored += 1;
            out.re_hist.add(score.re);
            out.overall.update(score.re);
            if self.opts.collect_rows {
                out.rows.push(ScoreRow {
                    id: m.id.clone(),
                    re: score.re,
                    word_count: score.word_count,
                    syllable_count: score.syllable_count,
                });
            }
            if let (Some(point), Some(index)) = (m.geo, self.index) {
                out.geo_scored += 1;
                match index.assign_idx(point, self.opts.geo_threshold) {
                    Some(i) => zcta.entry(i).or_default().update(score.re),
                    None => out.unassigned += 1,
                }
            }
        }
        out.zcta = zcta.into_iter().collect();
        out
    }

    fn map_wave(&self, wave: &[Message]) -> Vec<ChunkOut> {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            match (&self.pool, self.opts.workers) {
                (Some(pool), _) => {
                    return pool.install(|| wave.par_chunks(CHUNK).map(|c| self.chunk(c)).collect())
                }
                (None, 0) => return wave.par_chunks(CHUNK).map(|c| self.chunk(c)).collect(),
                _ => {}
            }
        }
        wave.chunks(CHUNK).map(|c| self.chunk(c)).collect()
    }
}

/// Runs the streaming pass over an in-memory or generated message sequence.
///
/// `on_row` and `on_delta` observe rows in corpus order. Reader-level
/// counters ([`PassCounts::read`] and [`PassCounts::skipped_malformed`])
/// stay zero here; [`process_corpus`] fills them from the file reader.
pub fn process_messages(
    messages: impl Iterator<Item = Message>,
    index: Option<&ZctaIndex>,
    opts: &PassOptions,
    mut on_row: impl FnMut(&ScoreRow),
    mut on_delta: impl FnMut(&DeltaRow),
) -> Result<PassOutput, PipelineError> {
    let pass = Pass::new(opts, index)?;
    let mut counts = PassCounts::default();
    let mut re_hist = Histogram::new(opts.re_bins);
    let mut delta_hist = Histogram::new(opts.delta_bins);
    let mut overall = RunningStats::new();
    let n_centroids = index.map_or(0, |i| i.centroids().len());
    let mut zcta_dense: Vec<RunningStats> = vec![RunningStats::new(); n_centroids];

    let mut messages = messages.peekable();
    let mut wave: Vec<Message> = Vec::new();
    while messages.peek().is_some() {
        wave.clear();
        for m in messages.by_ref() {
            match (&opts.lang, &m.lang) {
                (Some(want), Some(have)) if want == have => {}
                (Some(_), _) => {
                    counts.lang_filtered += 1;
                    continue;
                }
                (None, _) => {}
            }
            wave.push(m);
            if wave.len() == CHUNK * WAVE_CHUNKS {
                break;
            }
        }
        for chunk in pass.map_wave(&wave) {
            counts.scored += chunk.scored;
            counts.null_score += chunk.null_score;
            counts.hashtag_messages += chunk.hashtag_messages;
            counts.delta_rows += chunk.delta_hist.total();
            counts.geo_scored += chunk.geo_scored;
            counts.unassigned += chunk.unassigned;
            re_hist.merge(&chunk.re_hist);
            delta_hist.merge(&chunk.delta_hist);
            overall.merge(&chunk.overall);
            for (i, s) in chunk.zcta {
                zcta_dense[i as usize].merge(&s);
            }
            for row in &chunk.rows {
                on_row(row);
            }
            for row in &chunk.deltas {
                on_delta(row);
            }
        }
    }

    let zcta = match index {
        Some(index) => index
            .centroids()
            .iter()
            .zip(zcta_dense)
            .filter(|(_, s)| s.n() > 0)
            .map(|(c, s)| ZctaAggregate {
                zcta_id: c.zcta_id.clone(),
                stats: s,
                centroid: c.point,
            })
            .collect(),
        None => Vec::new(),
    };
    Ok(PassOutput {
        re_hist,
        delta_hist,
        overall,
        zcta,
        counts,
    })
}

/// Runs the streaming pass over a file-backed reader, folding the reader's
/// line counters into the result. I/O failures mid-stream are fatal.
pub fn process_corpus<R: BufRead>(
    reader: &mut MessageReader<R>,
    index: Option<&ZctaIndex>,
    opts: &PassOptions,
    on_row: impl FnMut(&ScoreRow),
    on_delta: impl FnMut(&DeltaRow),
) -> Result<PassOutput, PipelineError> {
    let mut out = process_messages(reader.by_ref(), index, opts, on_row, on_delta)?;
    if let Some(err) = reader.take_io_error() {
        return Err(err.into());
    }
    out.counts.read = reader.read_count();
    out.counts.skipped_malformed = reader.skipped_count();
    Ok(out)
}

/// One fitted line, or the reason there is none, at a given group-size
/// threshold.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub min_count: u64,
    /// Groups that survived the threshold and joined an education row.
    pub n_zcta: usize,
    /// Points whose standard error was raised to the floor.
    pub n_floored: usize,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub slope_se: Option<f64>,
}

/// Contents of regression.json.
#[derive(Debug, Clone, Serialize)]
pub struct RegressionReport {
    pub predictor: &'static str,
    pub se_floor: f64,
    pub fit: FitReport,
    pub sweep: Vec<FitReport>,
}

/// Which education column drives the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Predictor {
    #[default]
    Bachelors,
    HighSchool,
}

impl Predictor {
    pub fn column(self) -> &'static str {
        match self {
            Predictor::Bachelors => "pct_bachelors",
            Predictor::HighSchool => "pct_hs",
        }
    }
}

/// (x, y, se_y) triples for one fit, plus how many groups had no education
/// row.
fn fit_points(
    groups: &[ZctaAggregate],
    table: &EducationTable,
    predictor: Predictor,
    min_count: u64,
) -> (Vec<WlsPoint>, u64) {
    let kept: Vec<ZctaAggregate> = groups
        .iter()
        .filter(|g| g.stats.n() >= min_count)
        .cloned()
        .collect();
    let (joined, unmatched) = census::join_education(kept, table);
    let points = joined
        .iter()
        .map(|j| WlsPoint {
            x: match predictor {
                Predictor::Bachelors => j.education.pct_bachelors,
                Predictor::HighSchool => j.education.pct_high_school,
            },
            y: j.aggregate.stats.mean(),
            se_y: j.aggregate.stats.standard_error().unwrap_or(0.0),
        })
        .collect();
    (points, unmatched)
}

fn fit_report(points: &[WlsPoint], se_floor: f64, min_count: u64) -> FitReport {
    match weighted_least_squares(points, se_floor) {
        Ok(fit) => FitReport {
            min_count,
            n_zcta: points.len(),
            n_floored: fit.n_floored,
            slope: Some(fit.slope),
            intercept: Some(fit.intercept),
            slope_se: Some(fit.slope_se),
        },
        Err(_) => FitReport {
            min_count,
            n_zcta: points.len(),
            n_floored: 0,
            slope: None,
            intercept: None,
            slope_se: None,
        },
    }
}

fn fmt3(x: f64) -> String {
    format!("{x:.3}")
}

struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, PipelineError> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(write_err(&path))?;
        let mut writer = csv::Writer::from_writer(BufWriter::new(file));
        writer.write_record(header).map_err(|e| csv_err(&path, e))?;
        Ok(Self { path, writer })
    }

    fn row<'f>(&mut self, fields: impl IntoIterator<Item = &'f str>) -> Result<(), PipelineError> {
        self.writer
            .write_record(fields)
            .map_err(|e| csv_err(&self.path, e))
    }

    fn finish(mut self) -> Result<(), PipelineError> {
        self.writer.flush().map_err(write_err(&self.path))
    }
}

fn write_histogram_csv(dir: &Path, name: &str, hist: &Histogram) -> Result<(), PipelineError> {
    let mut out = CsvOut::create(dir, name, &["bin_lo", "bin_hi", "count"])?;
    let spec = hist.spec();
    for (i, count) in hist.counts().iter().enumerate() {
        let (lo, hi) = spec.edges(i);
        out.row([fmt3(lo).as_str(), fmt3(hi).as_str(), count.to_string().as_str()])?;
    }
    out.finish()
}

fn write_aggregates_csv(dir: &Path, groups: &[ZctaAggregate]) -> Result<(), PipelineError> {
    let mut out = CsvOut::create(
        dir,
        "zcta_aggregates.csv",
        &["zcta_id", "lat", "lon", "n", "mean_re", "se"],
    )?;
    for g in groups {
        out.row([
            g.zcta_id.as_str(),
            fmt3(g.centroid.lat).as_str(),
            fmt3(g.centroid.lon).as_str(),
            g.stats.n().to_string().as_str(),
            fmt3(g.stats.mean()).as_str(),
            fmt3(g.stats.standard_error().unwrap_or(0.0)).as_str(),
        ])?;
    }
    out.finish()
}

/// Writes binned_medians.csv and density_grid.csv for `(x, mean_re)` points.
fn write_plot_files(
    dir: &Path,
    points: &[(f64, f64)],
    median_bin_width: f64,
    re_bins: BinSpec,
) -> Result<(), PipelineError> {
    let medians = binned_medians(points.iter().copied(), median_bin_width)?;
    let mut med_csv = CsvOut::create(dir, "binned_medians.csv", &["bin_center", "median_re", "count"])?;
    for m in &medians {
        med_csv.row([
            fmt3(m.center).as_str(),
            fmt3(m.median).as_str(),
            m.count.to_string().as_str(),
        ])?;
    }
    med_csv.finish()?;

    let x_spec = BinSpec::new(0.0, 100.0, median_bin_width)?;
    let grid = density_grid(points.iter().copied(), x_spec, re_bins);
    let mut grid_csv = CsvOut::create(
        dir,
        "density_grid.csv",
        &["x_lo", "x_hi", "y_lo", "y_hi", "count"],
    )?;
    for (xi, yi, count) in grid.cells() {
        let (x_lo, x_hi) = x_spec.edges(xi);
        let (y_lo, y_hi) = re_bins.edges(yi);
        grid_csv.row([
            fmt3(x_lo).as_str(),
            fmt3(x_hi).as_str(),
            fmt3(y_lo).as_str(),
            fmt3(y_hi).as_str(),
            count.to_string().as_str(),
        ])?;
    }
    grid_csv.finish()
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), PipelineError> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(write_err(&path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| PipelineError::Write {
        path: path.clone(),
        source: e.into(),
    })?;
    w.write_all(b"\n").map_err(write_err(&path))?;
    w.flush().map_err(write_err(&path))
}

/// Under/overflow counts for one histogram, reported in the run summary.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct HistogramTails {
    pub underflow: u64,
    pub overflow: u64,
}

impl From<&Histogram> for HistogramTails {
    fn from(h: &Histogram) -> Self {
        Self {
            underflow: h.underflow(),
            overflow: h.overflow(),
        }
    }
}

/// Geo-stage counters for the run summary.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct GeoSummary {
    pub assigned: u64,
    pub unassigned: u64,
    pub groups_total: usize,
    pub groups_kept: usize,
    pub below_min_count_messages: u64,
    pub unmatched_education: u64,
}

/// Run summary written to summary.json. The timestamp lives here and only
/// here so every data file is reproducible byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub input: PathBuf,
    pub format: &'static str,
    pub lang: Option<String>,
    pub hashtag_policy: &'static str,
    pub workers: usize,
    pub min_count: u64,
    pub geo_threshold: f64,
    pub counts: PassCounts,
    pub re_histogram: HistogramTails,
    pub delta_histogram: HistogramTails,
    pub mean_re: Option<f64>,
    pub geo: Option<GeoSummary>,
    /// "written" or a "skipped: ..." reason.
    pub regression: String,
    pub elapsed_seconds: f64,
    pub messages_per_second: f64,
    pub unix_timestamp: u64,
}

fn format_name(f: CorpusFormat) -> &'static str {
    match f {
        CorpusFormat::Jsonl => "jsonl",
        CorpusFormat::Lines => "lines",
    }
}

fn policy_name(p: HashtagPolicy) -> &'static str {
    match p {
        HashtagPolicy::Exclude => "exclude",
        HashtagPolicy::Include => "include",
    }
}

fn make_summary(
    config: &PipelineConfig,
    out: &PassOutput,
    geo: Option<GeoSummary>,
    regression: String,
    elapsed: f64,
) -> RunSummary {
    RunSummary {
        input: config.input.clone(),
        format: format_name(config.format),
        lang: config.lang.clone(),
        hashtag_policy: policy_name(config.policy),
        workers: config.workers,
        min_count: config.min_count,
        geo_threshold: config.geo_threshold,
        counts: out.counts,
        re_histogram: (&out.re_hist).into(),
        delta_histogram: (&out.delta_hist).into(),
        mean_re: (out.overall.n() > 0).then(|| out.overall.mean()),
        geo,
        regression,
        elapsed_seconds: elapsed,
        messages_per_second: if elapsed > 0.0 {
            out.counts.read as f64 / elapsed
        } else {
            0.0
        },
        unix_timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    }
}

/// Runs every stage and writes all output files into `config.out_dir`.
///
/// Inputs (corpus path, centroid table, education table) are opened and
/// validated before the first output file is created, so a fatal load error
/// leaves no partial artifacts.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    let started = Instant::now();

    let index = config
        .centroids
        .as_deref()
        .map(|p| geo::load_centroids(p).and_then(ZctaIndex::new))
        .transpose()?;
    let education = config
        .education
        .as_deref()
        .map(census::load_education)
        .transpose()?;
    let mut reader = corpus::read_messages(&config.input, config.format)?;

    std::fs::create_dir_all(&config.out_dir).map_err(write_err(&config.out_dir))?;
    let mut scores = CsvOut::create(
        &config.out_dir,
        "scores.csv",
        &["id", "re", "word_count", "syllable_count"],
    )?;
    let mut deltas = CsvOut::create(&config.out_dir, "hashtag_delta.csv", &["id", "delta"])?;

    let mut score_err: Option<PipelineError> = None;
    let mut delta_err: Option<PipelineError> = None;
    let out = process_corpus(
        &mut reader,
        index.as_ref(),
        &config.pass_options(true, true),
        |row| {
            let result = scores.row([
                row.id.as_str(),
                fmt3(row.re).as_str(),
                row.word_count.to_string().as_str(),
                row.syllable_count.to_string().as_str(),
            ]);
            if let Err(e) = result {
                score_err.get_or_insert(e);
            }
        },
        |row| {
            if let Err(e) = deltas.row([row.id.as_str(), fmt3(row.delta).as_str()]) {
                delta_err.get_or_insert(e);
            }
        },
    )?;
    if let Some(e) = score_err.or(delta_err) {
        return Err(e);
    }
    scores.finish()?;
    deltas.finish()?;

    write_histogram_csv(&config.out_dir, "histogram.csv", &out.re_hist)?;
    write_histogram_csv(
        &config.out_dir,
        "hashtag_delta_histogram.csv",
        &out.delta_hist,
    )?;

    let mut geo_summary = None;
    let regression;
    if index.is_some() {
        let mut below = 0u64;
        let kept = geo::filter_groups(out.zcta.iter().cloned(), config.min_count, &mut below);
        write_aggregates_csv(&config.out_dir, &kept)?;

        let mut gsum = GeoSummary {
            assigned: out.counts.geo_scored - out.counts.unassigned,
            unassigned: out.counts.unassigned,
            groups_total: out.zcta.len(),
            groups_kept: kept.len(),
            below_min_count_messages: below,
            unmatched_education: 0,
        };

        regression = match education.as_ref() {
            Some(table) if !out.zcta.is_empty() => {
                let predictor = Predictor::Bachelors;
                let (points, unmatched) =
                    fit_points(&out.zcta, table, predictor, config.min_count);
                gsum.unmatched_education = unmatched;
                let report = RegressionReport {
                    predictor: predictor.column(),
                    se_floor: config.se_floor,
                    fit: fit_report(&points, config.se_floor, config.min_count),
                    sweep: SWEEP_MIN_COUNTS
                        .iter()
                        .map(|&mc| {
                            let (pts, _) = fit_points(&out.zcta, table, predictor, mc);
                            fit_report(&pts, config.se_floor, mc)
                        })
                        .collect(),
                };
                write_json(&config.out_dir, "regression.json", &report)?;

                let plot_points: Vec<(f64, f64)> =
                    points.iter().map(|p| (p.x, p.y)).collect();
                write_plot_files(
                    &config.out_dir,
                    &plot_points,
                    config.median_bin_width,
                    config.re_bins,
                )?;
                "written".to_owned()
            }
            Some(_) => "skipped: no ZCTA groups".to_owned(),
            None => "skipped: no education table".to_owned(),
        };
        geo_summary = Some(gsum);
    } else {
        regression = "skipped: no centroid table".to_owned();
    }

    let summary = make_summary(
        config,
        &out,
        geo_summary,
        regression,
        started.elapsed().as_secs_f64(),
    );
    write_json(&config.out_dir, "summary.json", &summary)?;
    Ok(summary)
}

/// `score` subcommand: one pass, writes scores.csv only.
pub fn run_score(config: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    run_partial(config, true, false)
}

/// `hashtag-delta` subcommand: one pass, writes hashtag_delta.csv and its
/// histogram.
pub fn run_hashtag_delta(config: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    run_partial(config, false, true)
}

fn run_partial(
    config: &PipelineConfig,
    scores_out: bool,
    deltas_out: bool,
) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    let started = Instant::now();
    let mut reader = corpus::read_messages(&config.input, config.format)?;
    std::fs::create_dir_all(&config.out_dir).map_err(write_err(&config.out_dir))?;

    let mut scores = if scores_out {
        Some(CsvOut::create(
            &config.out_dir,
            "scores.csv",
            &["id", "re", "word_count", "syllable_count"],
        )?)
    } else {
        None
    };
    let mut deltas = if deltas_out {
        Some(CsvOut::create(
            &config.out_dir,
            "hashtag_delta.csv",
            &["id", "delta"],
        )?)
    } else {
        None
    };

    let mut score_err: Option<PipelineError> = None;
    let mut delta_err: Option<PipelineError> = None;
    let out = process_corpus(
        &mut reader,
        None,
        &config.pass_options(scores_out, deltas_out),
        |row| {
            if let Some(w) = scores.as_mut() {
                let result = w.row([
                    row.id.as_str(),
                    fmt3(row.re).as_str(),
                    row.word_count.to_string().as_str(),
                    row.syllable_count.to_string().as_str(),
                ]);
                if let Err(e) = result {
                    score_err.get_or_insert(e);
                }
            }
        },
        |row| {
            if let Some(w) = deltas.as_mut() {
                if let Err(e) = w.row([row.id.as_str(), fmt3(row.delta).as_str()]) {
                    delta_err.get_or_insert(e);
                }
            }
        },
    )?;
    if let Some(e) = score_err.or(delta_err) {
        return Err(e);
    }
    if let Some(w) = scores {
        w.finish()?;
    }
    if let Some(w) = deltas {
        w.finish()?;
        write_histogram_csv(
            &config.out_dir,
            "hashtag_delta_histogram.csv",
            &out.delta_hist,
        )?;
    }

    Ok(make_summary(
        config,
        &out,
        None,
        "skipped: not requested".to_owned(),
        started.elapsed().as_secs_f64(),
    ))
}

/// `geo-aggregate` subcommand: one pass plus grouping, writes
/// zcta_aggregates.csv.
pub fn run_geo_aggregate(config: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    let started = Instant::now();
    let centroids = config.centroids.as_deref().ok_or_else(|| {
        PipelineError::Config("geo-aggregate requires a centroid table".to_owned())
    })?;
    let index = ZctaIndex::new(geo::load_centroids(centroids)?)?;
    let mut reader = corpus::read_messages(&config.input, config.format)?;
    std::fs::create_dir_all(&config.out_dir).map_err(write_err(&config.out_dir))?;

    let out = process_corpus(
        &mut reader,
        Some(&index),
        &config.pass_options(false, false),
        |_| {},
        |_| {},
    )?;

    let mut below = 0u64;
    let kept = geo::filter_groups(out.zcta.iter().cloned(), config.min_count, &mut below);
    write_aggregates_csv(&config.out_dir, &kept)?;

    let gsum = GeoSummary {
        assigned: out.counts.geo_scored - out.counts.unassigned,
        unassigned: out.counts.unassigned,
        groups_total: out.zcta.len(),
        groups_kept: kept.len(),
        below_min_count_messages: below,
        unmatched_education: 0,
    };
    Ok(make_summary(
        config,
        &out,
        Some(gsum),
        "skipped: not requested".to_owned(),
        started.elapsed().as_secs_f64(),
    ))
}

/// `histogram` subcommand: reads the `re` column of a scores.csv and writes
/// histogram.csv.
pub fn run_histogram(
    scores_path: &Path,
    bins: BinSpec,
    out_dir: &Path,
) -> Result<Histogram, PipelineError> {
    let mut hist = Histogram::new(bins);
    let file = File::open(scores_path).map_err(|source| PipelineError::ReadInput {
        path: scores_path.to_owned(),
        message: source.to_string(),
    })?;
    let mut rdr = csv::Reader::from_reader(BufReader::new(file));
    let headers = rdr.headers().map_err(|e| csv_err(scores_path, e))?.clone();
    let re_col = headers
        .iter()
        .position(|h| h.trim() == "re")
        .ok_or_else(|| PipelineError::ReadInput {
            path: scores_path.to_owned(),
            message: "missing column \"re\"".to_owned(),
        })?;
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_err(scores_path, e))?;
        let v = record.get(re_col).unwrap_or("");
        let x: f64 = v.parse().map_err(|_| PipelineError::ReadInput {
            path: scores_path.to_owned(),
            message: format!("row {}: cannot parse re value {v:?}", i + 2),
        })?;
        hist.add(x);
    }
    std::fs::create_dir_all(out_dir).map_err(write_err(out_dir))?;
    write_histogram_csv(out_dir, "histogram.csv", &hist)?;
    Ok(hist)
}

/// One row of a zcta_aggregates.csv, as read back by `regress`.
#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub zcta_id: String,
    pub n: u64,
    pub mean_re: f64,
    pub se: f64,
}

fn read_aggregates(path: &Path) -> Result<Vec<AggregateRow>, PipelineError> {
    let bad = |message: String| PipelineError::ReadInput {
        path: path.to_owned(),
        message,
    };
    let file = File::open(path).map_err(|e| bad(e.to_string()))?;
    let mut rdr = csv::Reader::from_reader(BufReader::new(file));
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| bad(format!("missing column {name:?}")))
    };
    let (id_c, n_c, mean_c, se_c) = (col("zcta_id")?, col("n")?, col("mean_re")?, col("se")?);
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let num = |c: usize, name: &str| -> Result<f64, PipelineError> {
            let v = record.get(c).unwrap_or("");
            v.parse()
                .map_err(|_| bad(format!("row {}: cannot parse {name} value {v:?}", i + 2)))
        };
        out.push(AggregateRow {
            zcta_id: record.get(id_c).unwrap_or("").to_owned(),
            n: num(n_c, "n")? as u64,
            mean_re: num(mean_c, "mean_re")?,
            se: num(se_c, "se")?,
        });
    }
    Ok(out)
}

/// `regress` subcommand: fits a zcta_aggregates.csv against an education
/// table and writes regression.json, binned_medians.csv, density_grid.csv.
#[allow(clippy::too_many_arguments)]
pub fn run_regress(
    aggregates_path: &Path,
    education_path: &Path,
    predictor: Predictor,
    se_floor: f64,
    min_count: u64,
    median_bin_width: f64,
    re_bins: BinSpec,
    out_dir: &Path,
) -> Result<RegressionReport, PipelineError> {
    if !se_floor.is_finite() || se_floor <= 0.0 {
        return Err(PipelineError::Config(format!(
            "se floor must be positive, got {se_floor}"
        )));
    }
    BinSpec::new(0.0, 100.0, median_bin_width).map_err(|_| {
        PipelineError::Config(format!(
            "median bin width must be positive, got {median_bin_width}"
        ))
    })?;
    let rows = read_aggregates(aggregates_path)?;
    let table = census::load_education(education_path)?;

    let points_at = |mc: u64| -> Vec<WlsPoint> {
        let mut joined: Vec<(&AggregateRow, f64)> = rows
            .iter()
            .filter(|r| r.n >= mc)
            .filter_map(|r| {
                table.get(&r.zcta_id).map(|edu| {
                    let x = match predictor {
                        Predictor::Bachelors => edu.pct_bachelors,
                        Predictor::HighSchool => edu.pct_high_school,
                    };
                    (r, x)
                })
            })
            .collect();
        joined.sort_by(|a, b| a.0.zcta_id.cmp(&b.0.zcta_id));
        joined
            .into_iter()
            .map(|(r, x)| WlsPoint {
                x,
                y: r.mean_re,
                se_y: r.se,
            })
            .collect()
    };

    let report = RegressionReport {
        predictor: predictor.column(),
        se_floor,
        fit: fit_report(&points_at(min_count), se_floor, min_count),
        sweep: SWEEP_MIN_COUNTS
            .iter()
            .map(|&mc| fit_report(&points_at(mc), se_floor, mc))
            .collect(),
    };
    std::fs::create_dir_all(out_dir).map_err(write_err(out_dir))?;
    write_json(out_dir, "regression.json", &report)?;

    let plot_points: Vec<(f64, f64)> = points_at(min_count)
        .iter()
        .map(|p| (p.x, p.y))
        .collect();
    write_plot_files(out_dir, &plot_points, median_bin_width, re_bins)?;
    Ok(report)
}
