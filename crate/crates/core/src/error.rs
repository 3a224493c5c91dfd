use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("not a permutation of 0..{n}: {detail}")]
    NotAPermutation { n: usize, detail: String },
    #[error("unsupported TSPLIB format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed TSPLIB input at line {line}: {detail}")]
    Malformed { line: usize, detail: String },
    #[error("instance too large for exact solver: n = {n}, limit = {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("reference optimum {optimum} is worse than observed best {observed}")]
    OptimumBelowObserved { optimum: f64, observed: f64 },
    #[error("series error: {0}")]
    Series(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
