//! Readability analytics for short-message corpora.
//!
//! The crate scores messages with a Flesch reading-ease variant adapted to
//! single-sentence text, aggregates scores by ZCTA via nearest-centroid
//! assignment, joins per-ZCTA education rates, and fits a weighted
//! regression of mean readability against educational attainment. Every
//! stage is exposed both as a library call and as a `readease` subcommand.
//!
//! With the default `parallel` feature the scoring pass fans out over a
//! rayon pool; chunking is deterministic, so results are identical for any
//! worker count, including the sequential fallback built with
//! `--no-default-features`.

#![forbid(unsafe_code)]

pub mod census;
pub mod corpus;
pub mod geo;
pub mod pipeline;
pub mod score;
pub mod stats;
pub mod syllable;
pub mod token;

pub use census::{load_education, EducationTable, ZctaEducation};
pub use corpus::{read_messages, CorpusFormat, Message};
pub use geo::{load_centroids, GeoPoint, ZctaCentroid, ZctaIndex};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineError};
pub use score::{score_delta, score_message, HashtagPolicy, ReadabilityScore, MAX_SCORE};
pub use stats::{weighted_least_squares, BinSpec, Histogram, RunningStats};
pub use syllable::count_syllables;
pub use token::{tokenize, Token, TokenClass};
