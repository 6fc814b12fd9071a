use thiserror::Error;

/// Errors raised by fraclab operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FracError {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported dimension {0} (supported: 1, 2, 3)")]
    UnsupportedDimension(usize),

    /// The field has no certificate of membership in the weighted class L¹_s.
    #[error("field is not certified to lie in L1_s for s = {s}")]
    NotL1s { s: f64 },

    /// Pointwise kernel evaluation at one of its singular sets.
    #[error("kernel singularity: {0}")]
    Singularity(String),

    /// Two independent quantities that must agree do not.
    #[error("inconsistency: {0}")]
    Inconsistent(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, FracError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(FracError::Domain(msg.into()))
}
