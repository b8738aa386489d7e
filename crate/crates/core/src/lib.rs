//! Website risk-scoring engine.
//!
//! The crate is split along the scoring pipeline:
//!
//! - [`features`]: URL parsing, lexical features and domain metadata
//! - [`content`]: structural HTML features and script obfuscation scoring
//! - [`session`]: browsing-session event accumulation
//! - [`dataset`]: synthetic generation, CSV loading, splitting, normalization, resampling
//! - [`models`]: the six-model ensemble and its bundle format
//! - [`scoring`]: aggregation, verdict tiers, explanations and session rescoring
//! - [`reputation`]: TTL cache of canonical-URL verdicts with a JSONL journal
//! - [`pipeline`]: glue that turns a URL (+ HTML, metadata, session) into a [`FeatureVector`]
//!
//! Every model consumes vectors laid out by [`manifest`].

pub mod config;
pub mod content;
pub mod dataset;
pub mod features;
pub mod manifest;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod reputation;
pub mod scoring;
pub mod session;

pub use manifest::{FeatureVector, FEATURE_NAMES, N_FEATURES};
