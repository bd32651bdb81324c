use thiserror::Error;

/// Errors reported by every fallible operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("construction failure: {0}")]
    ConstructionFailure(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("out of regime: {0}")]
    OutOfRegime(String),
    #[error("empty budget: {0}")]
    EmptyBudget(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
