use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("correlation function is not symmetric for elements {a} and {b}: {ab} vs {ba}")]
    AsymmetricCorrelation { a: usize, b: usize, ab: f64, ba: f64 },

    #[error("correlation between elements {a} and {b} is invalid: {value}")]
    InvalidCorrelation { a: usize, b: usize, value: f64 },

    #[error("aggregate quality needs at least one subnet")]
    EmptyAggregate,

    #[error("subnet weight must be positive and finite, got {0}")]
    InvalidWeight(f64),

    #[error("exact split enumeration is limited to {cap} subnets, got {count}")]
    TooManySubnets { count: usize, cap: usize },

    #[error("split enumeration needs at least one subnet")]
    NoSubnets,

    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    #[error("precision is already at its maximum")]
    PrecisionExhausted,

    #[error("results reference overlapping subnets {a} and {b}")]
    OverlappingSubnets { a: usize, b: usize },

    #[error("frequency {frequency_mhz} MHz is outside the {model} validity range {min_mhz}-{max_mhz} MHz")]
    FrequencyOutOfRange {
        model: &'static str,
        frequency_mhz: f64,
        min_mhz: f64,
        max_mhz: f64,
    },

    #[error("objective evaluation failed: {0}")]
    Objective(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("traces describe different networks ({a} vs {b})")]
    MismatchedTraces { a: String, b: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field,
            reason: reason.into(),
        }
    }
}
