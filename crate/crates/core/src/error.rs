use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The warping function violates the structural hypotheses.
    #[error("geometry error: {0}")]
    Geometry(String),
    /// A nonlinearity fails its validity predicate for the given model.
    #[error("invalid nonlinearity: {0}")]
    Validity(String),
    /// Evaluation would overflow (exponential argument beyond the guard).
    #[error("overflow evaluating f at u = {0}")]
    Overflow(f64),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("singular Jacobian: pivot {pivot:e} at row {row}")]
    SingularJacobian { row: usize, pivot: f64 },
    /// The hypotheses of a closed-form extremal theorem are not met.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    /// A verification ran to completion but missed its acceptance bound.
    #[error("report failure: {0}")]
    ReportFailure(String),
    /// A computed solution broke a structural invariant (positivity, monotonicity).
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
