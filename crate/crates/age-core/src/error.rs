use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: incompatible shapes {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("{op}: non-positive input {value} at flat index {index}")]
    NonPositiveInput {
        op: &'static str,
        value: f64,
        index: usize,
    },

    #[error("backward requires a scalar root, got shape {shape:?}")]
    NonScalarRoot { shape: Vec<usize> },

    #[error("optimizer step requires populated gradients (parameter {index} has none)")]
    MissingGrad { index: usize },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("row {index} has norm {norm:.3e}, below the projection threshold")]
    DegenerateRow { index: usize, norm: f64 },

    #[error("interpolation endpoints are antipodal; the great-circle arc is ambiguous")]
    AntipodalEndpoints,

    #[error("non-finite loss at iteration {iter}; training aborted")]
    NonFiniteLoss { iter: usize },

    #[error("line {line}: {msg}")]
    CsvParse { line: usize, msg: String },

    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
