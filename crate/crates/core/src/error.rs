use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A standing hypothesis of the problem is violated; the message names it.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    /// Magnitudes leave the double-precision range; log-domain mode is required.
    #[error("{0}; rebuild in log-domain mode")]
    Overflow(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
