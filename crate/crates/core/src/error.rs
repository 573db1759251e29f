use thiserror::Error;

/// Errors produced by the estimators, samplers and experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("L_({p},1) norm is infinite for this law (tail index {tail_index}); raise the tail index or lower p")]
    InfiniteNorm { p: f64, tail_index: f64 },

    #[error("non-positive risk {risk} at n = {n}; log-log fit undefined")]
    NonPositiveRisk { n: usize, risk: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
