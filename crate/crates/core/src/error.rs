use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function or barrier.
    #[error("domain error: {0}")]
    Domain(String),
    /// A structural precondition (image identity, start point, ...) failed.
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("root finder failed: {0}")]
    NoConvergence(String),
    #[error("invalid input: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
