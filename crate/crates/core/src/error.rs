use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter set violates its invariants.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Initial or boundary data fail a compatibility condition.
    #[error("incompatible data: {0}")]
    IncompatibleData(String),

    /// A bracketed root search failed to converge or lost its bracket.
    #[error("root finding failed: {0}")]
    RootFind(String),

    /// A fixed-point iteration failed to contract after all retries.
    #[error("fixed-point iteration diverged: {0}")]
    NonContraction(String),

    /// A certificate hypothesis is violated (the condition itself may still
    /// be evaluated; this error is for operations that refuse to run).
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// A value lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Configuration parsing or validation failure.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
