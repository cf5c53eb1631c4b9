use thiserror::Error;

/// Errors raised by the heat-load model and its tooling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unparsable row at line {line}: {reason}")]
    UnparsableRow { line: u64, reason: String },
    #[error("timestamps are not strictly increasing (at timestamp {timestamp})")]
    NonMonotonicTimestamps { timestamp: i64 },
    #[error("split boundary {boundary} lies outside the dataset time range")]
    BoundaryOutOfRange { boundary: i64 },
    #[error("dataset has {count} gap(s); learning requires contiguous hourly rows")]
    DatasetHasGaps { count: usize },
    #[error("insufficient history: need {needed} samples, have {available}")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("insufficient lags: need {needed}, have {available}")]
    InsufficientLags { needed: usize, available: usize },
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("alignment mismatch: expected {expected} rows, found {found}")]
    AlignmentMismatch { expected: usize, found: usize },
    #[error("objective is not finite")]
    NonFiniteObjective,
    #[error("gradient is not finite (coordinate {index})")]
    NonFiniteGradient { index: usize },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("missing exogenous inputs: need {needed} rows, have {available}")]
    MissingExogenous { needed: usize, available: usize },
    #[error("model file version {found} is not supported (expected {expected})")]
    SchemaVersionMismatch { found: u32, expected: u32 },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("target series has zero variance; R² is undefined")]
    DegenerateVariance,
    #[error("design matrix is singular")]
    SingularDesign,
    #[error("series does not cover one full aggregation period")]
    InsufficientCoverage,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
