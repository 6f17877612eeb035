use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum UrError {
    /// Invalid options or data that violates a precondition of the requested
    /// procedure (internal gaps, incompatible bootstrap scheme, bad bounds, ...).
    #[error("{0}")]
    Validation(String),

    /// A computation could not proceed because the data is numerically
    /// degenerate (constant series, singular regression, non-negative
    /// bootstrap quantile, ...).
    #[error("{0}")]
    Degenerate(String),

    /// CSV input could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for UrError {
    fn from(e: csv::Error) -> Self {
        UrError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, UrError>;

pub(crate) fn validation(msg: impl Into<String>) -> UrError {
    UrError::Validation(msg.into())
}

pub(crate) fn degenerate(msg: impl Into<String>) -> UrError {
    UrError::Degenerate(msg.into())
}
