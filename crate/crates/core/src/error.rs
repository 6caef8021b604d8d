//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CbmError {
    /// Text input (data file, model file) that does not match its format.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A caller broke an operation's contract (bad lengths, out-of-range
    /// indices, nonpositive thresholds, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A non-finite value surfaced where a finite one is required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// An enumeration or expansion would exceed its size cap.
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    /// Inputs contradict each other (e.g. duplicate points with different targets).
    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CbmError>;

impl CbmError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        CbmError::Parse { line, msg: msg.into() }
    }
}
