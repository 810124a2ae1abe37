use thiserror::Error;

/// Errors produced by grid construction, operator assembly and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input is degenerate for the requested quantity (e.g. a 0/0 ratio).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Evaluation requested at a singular point (e.g. coincident kernel arguments).
    #[error("singular input: {0}")]
    SingularInput(String),

    /// A numerical process failed (non-finite iterate, failed factorization).
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateInput(msg.into())
    }
    pub fn singular(msg: impl Into<String>) -> Self {
        Error::SingularInput(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::NumericalFailure(msg.into())
    }
}
