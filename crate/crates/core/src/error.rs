use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("duplicate model id `{0}`")]
    DuplicateModel(String),

    #[error("predictions for `{model}` do not match the dataset (missing: {missing:?}, extraneous: {extraneous:?})")]
    IncompleteJoin {
        model: String,
        missing: Vec<String>,
        extraneous: Vec<String>,
    },

    #[error("metric `{metric}` cannot score a {task} dataset")]
    MetricMismatch {
        metric: &'static str,
        task: &'static str,
    },

    #[error("class probabilities for `{id}` sum to {sum}, expected 1")]
    ProbabilitySum { id: String, sum: f64 },

    #[error("invalid record `{id}`: {reason}")]
    InvalidRecord { id: String, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("unknown id `{0}`")]
    UnknownId(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("{dimension} unavailable")]
    DimensionUnavailable { dimension: &'static str },

    #[error("too few instances: need at least {needed}, got {got}")]
    TooFew { needed: usize, got: usize },

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Kendall tau is undefined: one ranking is constant")]
    UndefinedTau,

    #[error("zero pooled deviation with different means")]
    ZeroPooledDeviation,

    #[error("non-finite gradient at iteration {iteration}")]
    NonFiniteGradient { iteration: usize },

    #[error("singular system: column `{column}` is degenerate")]
    Singular { column: String },
}
