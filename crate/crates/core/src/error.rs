use thiserror::Error;

/// Unified error type for the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input that could not be parsed at all.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    /// Structurally parseable input that violates a dataset invariant.
    #[error("validation error: {0}")]
    Validation(String),
    /// A caller-supplied argument is out of range or inconsistent.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The requested model or search space exceeds a configured cap.
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    /// A solution does not index into the model it is checked against.
    #[error("structural mismatch: {0}")]
    Structural(String),
    /// The LP solver returned a non-optimal status where optimality is required.
    #[error("solver failure: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
