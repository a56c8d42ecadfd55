use thiserror::Error;

/// Errors raised by cost evaluation, segment construction and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("segment invalid at s = {s}: {reason}")]
    SegmentInvalid { s: f64, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("outside the cost domain: {0}")]
    Domain(String),

    #[error("cost evaluation failed: {0}")]
    Evaluation(String),

    #[error("point too close to the cut locus (distance {distance})")]
    CutLocus { distance: f64 },

    #[error("mixed Hessian degenerate (condition number {condition:e})")]
    Degenerate { condition: f64 },

    #[error("continuation failed after s = {last_good_s}: {reason}")]
    Continuation { last_good_s: f64, reason: String },

    #[error("Newton iteration failed: residual {residual:e} after {iterations} steps")]
    Newton { iterations: usize, residual: f64 },

    #[error("path is not a constant-speed geodesic (deviation {deviation:e})")]
    Parametrization { deviation: f64 },

    #[error("endpoint not optimal (residual {residual:e})")]
    NotOptimal { residual: f64 },

    #[error("transport problem infeasible: every plan charges an infinite cost")]
    Infeasible,

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("marginal mismatch (residual {residual:e})")]
    MarginalMismatch { residual: f64 },

    #[error("cost is not smooth at the requested point: {0}")]
    NotSmooth(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("instance exceeds the size guard: {0}")]
    SizeGuard(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
