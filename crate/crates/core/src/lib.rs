//! Benchmark transparency core.
//!
//! Measures how an evaluation dataset is distributed along six data
//! dimensions (ambiguity, difficulty, discriminability, length, noise,
//! perplexity), quantifies how much that distribution moves absolute scores
//! and model rankings, and predicts out-of-distribution scores from
//! dataset similarity vectors.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, reports and
//! the command-line driver live in the `transparency` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod features;
pub mod irt;
mod math;
pub mod metrics;
pub mod ood;
pub mod sampling;
pub mod similarity;
pub mod stats;

pub use data::{Dataset, Instance, PredictionSet, ScoreMatrix, TaskKind};
pub use error::{Error, Result};
pub use features::{Dimension, FeatureTable};
pub use metrics::MetricKind;
