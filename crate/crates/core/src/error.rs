use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate factor label `{0}`")]
    DuplicateLabel(String),
    #[error("factor `{label}` has dimension {dim}, need at least 2")]
    FactorTooSmall { label: String, dim: usize },
    #[error("unknown factor label `{0}`")]
    UnknownLabel(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operands live on different tensor spaces")]
    SpaceMismatch,
    #[error("basis value {value} out of range for factor `{label}` (dim {dim})")]
    BasisValueOutOfRange { label: String, value: usize, dim: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension {dim} exceeds the limit {limit} for {what}")]
    DimensionGuard { what: &'static str, dim: usize, limit: usize },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("state norm vanished during trajectory propagation")]
    ZeroNorm,
    #[error("model has a time-dependent profile that is not supported here")]
    TimeDependentModel,
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("non-positive value {value} in fit window at index {index}")]
    NonPositive { index: usize, value: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
