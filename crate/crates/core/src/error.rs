use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty segment")]
    EmptySegment,

    #[error("progression label {value} outside [0, {ranks}]")]
    LabelOutOfRange { value: u32, ranks: u32 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("brute-force detection is limited to {limit} frames, got {frames}")]
    TooManyFrames { frames: usize, limit: usize },

    #[error("layout infeasible: {0}")]
    LayoutInfeasible(String),

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("no ground truth instances")]
    NoGroundTruth,

    #[error("{source_name}: {message}")]
    Malformed {
        source_name: String,
        message: String,
    },

    /// `record` is the 0-based entry index in JSON files and the 1-based
    /// line or row number in text files.
    #[error("{source_name}: record {record}: {message}")]
    Record {
        source_name: String,
        record: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

pub(crate) fn record(source: &str, record: usize, message: impl Into<String>) -> Error {
    Error::Record {
        source_name: source.to_string(),
        record,
        message: message.into(),
    }
}
