use thiserror::Error;

/// Errors produced by the landmark2vec library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("context size n = {n} must lie in [2, {landmarks}]")]
    InvalidN { n: usize, landmarks: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("no measurement produced a valid training pair")]
    EmptyDataset,

    #[error("need at least 2 training pairs to split, got {0}")]
    TooFewPairs(usize),

    #[error("invalid embedding dimension {0}: only 2 and 3 are supported")]
    InvalidDimension(usize),

    #[error("landmark index {index} out of range for L = {landmarks}")]
    IndexOutOfRange { index: usize, landmarks: usize },

    #[error("the stopping rule needs at least 2 validation losses, got {0}")]
    TooFewEpochs(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("measurement set carries no ground-truth coordinates")]
    MissingGroundTruth,

    #[error("landmark {0} has zero total weight across all measurements")]
    ZeroWeightLandmark(usize),

    #[error("measurement has zero total weight")]
    ZeroWeightMeasurement,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
