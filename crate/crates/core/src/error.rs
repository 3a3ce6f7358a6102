use thiserror::Error;

/// Errors raised by the algebra, grid, estimator and reporting layers.
#[derive(Debug, Error)]
pub enum KornError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operation is only defined for n = 3 (got n = {0})")]
    RequiresDim3(usize),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("exponent p = {0} is outside the admissible range 1 < p < ∞")]
    InvalidExponent(f64),

    #[error("boundary face set must not be empty")]
    EmptyGamma,

    #[error("invalid face label `{0}` (expected +xK or -xK with 1 <= K <= n)")]
    InvalidFace(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("admissible subspace is trivial")]
    ZeroSubspace,

    #[error("no convergence after {iterations} iterations (best value {best:e}, residual {residual:e})")]
    NotConverged {
        iterations: usize,
        best: f64,
        residual: f64,
    },

    #[error("kernel leak: {0}")]
    KernelLeak(String),

    #[error("dense oracle size guard: dimension {dim} exceeds {limit}")]
    OracleTooLarge { dim: usize, limit: usize },

    #[error("mass matrix is not positive definite (pivot {pivot} = {value:e})")]
    MassNotPositiveDefinite { pivot: usize, value: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, KornError>;
