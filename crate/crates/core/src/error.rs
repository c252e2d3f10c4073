use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("feature count {count} exceeds the limit of {limit}")]
    TooManyFeatures { count: u128, limit: u128 },

    #[error("linear solve failed ({reason}); condition estimate {condition:e}")]
    Solver { reason: String, condition: f64 },

    #[error("empty data set")]
    EmptyData,

    #[error("estimator failed: {0}")]
    Estimator(String),

    #[error("model format: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
