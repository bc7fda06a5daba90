use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a structural invariant (bad port index, malformed segments, ...).
    #[error("structural error: {0}")]
    Structural(String),

    /// An argument is outside the accepted domain of an operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The exact oracle refused an instance that exceeds its limits.
    #[error("oracle refused instance: {0}")]
    OracleRefused(String),

    /// An internal invariant broke; indicates a bug rather than bad input.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

pub(crate) fn internal(msg: impl Into<String>) -> Error {
    Error::Internal(msg.into())
}
