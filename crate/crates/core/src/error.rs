use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point is the zero vector; polar decomposition is undefined")]
    DegeneratePoint,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("measure has zero total mass")]
    EmptyMeasure,

    #[error("gain evaluated to an invalid value {value} at angle/direction probe {probe}")]
    InvalidGain { value: f64, probe: String },

    #[error("moment diverges: {0}")]
    MomentDivergence(String),

    #[error("unsupported measure pair: {0}")]
    UnsupportedPair(String),

    #[error("invalid construction: {0}")]
    InvalidConstruction(String),

    #[error("empty input")]
    EmptyInput,

    #[error("degenerate tail: {0}")]
    DegenerateTail(String),

    #[error("gain has no declared bound; use the moment-condition route for unbounded gains")]
    UnboundedGain,

    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
