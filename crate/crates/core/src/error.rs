use std::io;

use thiserror::Error;

/// Errors surfaced by dataset ingestion, training, inference and the model container.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs violate a documented contract (shapes, ranges, non-finite values).
    #[error("validation error: {0}")]
    Validation(String),
    /// A text dataset could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    /// A binary file (model container or IDX) is malformed.
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, message: msg.into() }
    }
}
