use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DunklError {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A Jacobi weight with exponent -1 was requested (multiplicity zero).
    /// Callers must take the classical branch instead.
    #[error("degenerate weight: multiplicity 0 has no Jacobi rule, use the classical branch")]
    DegenerateWeight,

    /// A stated precondition of the operation is violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Requested work exceeds a configured capacity limit.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("eigenvalue iteration did not converge for order {0}")]
    NoConvergence(usize),
}

pub type Result<T> = std::result::Result<T, DunklError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(DunklError::Domain(msg.into()))
}
