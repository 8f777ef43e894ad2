use thiserror::Error;

/// Errors raised by channel construction, solvers and the sweep engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The operation needs a rank-1 (single path) hop but got a multipath one.
    #[error("unsupported channel: {0}")]
    UnsupportedChannel(String),

    #[error("search space too large: {candidates} candidates exceeds limit {limit}")]
    TooLarge { candidates: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
