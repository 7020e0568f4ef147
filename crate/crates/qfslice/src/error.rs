use thiserror::Error;

/// Errors surfaced by the library. `Domain` marks inputs outside the
/// mathematical domain of an operation (mapped to exit code 2 by the CLI);
/// everything else is treated as a usage or I/O failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("out of domain: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("slope {0} has no Farey parents")]
    NoParents(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
