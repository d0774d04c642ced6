use thiserror::Error;

/// Errors surfaced by the samplers and numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Caller violated an operation's precondition (dimension mismatch,
    /// degenerate frame, empty grid, ...).
    #[error("usage error: {0}")]
    Usage(String),
    /// Invalid model parameters, e.g. a stable index outside (0, 1).
    #[error("configuration error: {0}")]
    Config(String),
    /// A quadrature or series did not reach its tolerance.
    #[error("numerical error in {context}: {detail}")]
    Numerical { context: String, detail: String },
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numerical(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Numerical {
            context: context.into(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
