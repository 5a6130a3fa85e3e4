use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The point lies outside the domain required by the operation.
    /// `value` is the domain's gauge (or defining value) at the point.
    #[error("point outside {domain}: gauge {value}")]
    DomainViolation { domain: String, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("branch ambiguity: {0}")]
    BranchAmbiguity(String),

    #[error("singular matrix (|det| = {det:e})")]
    Singular { det: f64 },

    #[error("operation not supported for domain {0}")]
    UnsupportedDomain(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
