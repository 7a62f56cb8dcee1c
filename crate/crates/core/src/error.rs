use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("no covered records")]
    NoCoveredRecords,

    #[error("a class prior is required for this model")]
    MissingPrior,

    #[error("missing gold label for record `{0}`")]
    MissingGold(String),

    #[error("missing features for record `{0}`")]
    MissingFeatures(String),

    #[error("triplet method requires M ≥ 3 (got M = {0})")]
    TooFewLfsForTriplets(usize),

    #[error("no admissible triplet for LF {0}")]
    NoAdmissibleTriplet(usize),

    #[error("kernel system is singular or not positive definite; use alpha > 0")]
    SingularSystem,

    #[error("edge endpoint {0} is not a slice key")]
    MissingSlice(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
