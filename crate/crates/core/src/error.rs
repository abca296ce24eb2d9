//! Crate-wide error type and exit-code mapping for the CLI.

use std::io;
use std::path::Path;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or arguments (bad flag values, mismatched spec
    /// and dataset, refusal to overwrite outputs, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Tensor / layer / genome shape mismatch detected at construction time.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Numerically degenerate input (zero variance series, constant matrix).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A text file failed to parse; positions are 1-based.
    #[error("{path}: row {row}, column {col}: {message}")]
    Parse {
        path: String,
        row: usize,
        col: usize,
        message: String,
    },

    /// A binary or structured file has the wrong magic, length, or layout.
    #[error("malformed file {path}: {message}")]
    Format { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    /// A "cannot happen" condition; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn format(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().display().to_string(),
            message: message.into(),
        }
    }

    /// Process exit code contract: 0 success, 2 config/validation error,
    /// 3 I/O error, 4 internal invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Shape(_)
            | Error::DegenerateInput(_)
            | Error::Parse { .. }
            | Error::Format { .. } => 2,
            Error::Io { .. } => 3,
            Error::Internal(_) => 4,
        }
    }
}
