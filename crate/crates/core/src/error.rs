use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The two hypotheses produce identical statistics.
    #[error("degenerate test: {0}")]
    Degenerate(String),

    /// A quantity diverges (for example a visibility distance at certain strike).
    #[error("infinite distance: {0}")]
    Infinite(String),

    #[error("inconsistent data: {0}")]
    InconsistentData(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
