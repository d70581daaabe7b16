use thiserror::Error;

/// Errors raised by the kernel, solver and model routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("empty input")]
    Empty,

    #[error("invalid bandwidth: {0}")]
    InvalidBandwidth(f64),

    #[error("feature budget {budget} outside 1..={max}")]
    InvalidBudget { budget: usize, max: usize },

    #[error("mask popcount {found} does not match budget {expected}")]
    MaskBudget { expected: usize, found: usize },

    #[error("box bound C = {c} is infeasible for {n} samples (need C >= 1/N)")]
    InfeasibleBox { c: f64, n: usize },

    #[error("weights do not lie on the simplex (sum = {sum}, min = {min})")]
    OffSimplex { sum: f64, min: f64 },

    #[error("solver did not converge after {iterations} iterations (KKT residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NonSymmetric(f64),

    #[error("kernel matrix is degenerate: no eigenvalue above the retention floor")]
    DegenerateKernel,

    #[error("mask is already present in the constraint set")]
    DuplicateMask,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("model file, line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of an iterative method or of a numerical precondition,
    /// as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. } | Error::DegenerateKernel | Error::NonSymmetric(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
