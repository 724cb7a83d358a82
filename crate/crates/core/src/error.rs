use thiserror::Error;

/// Errors raised by the splitting-receiver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The caller broke a documented precondition (length mismatch, bad order, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numerical routine failed to reach its tolerance.
    #[error("numerical failure: {reason} (estimate {estimate:e}, error bound {error_bound:e})")]
    Numeric {
        reason: String,
        estimate: f64,
        error_bound: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
