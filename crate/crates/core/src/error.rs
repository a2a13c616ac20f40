use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not skew-symmetric: max |N + N^T| = {violation:e} exceeds {tolerance:e}")]
    NotSkewSymmetric { violation: f64, tolerance: f64 },

    #[error("matrix is not symmetric: max |M - M^T| = {violation:e} exceeds {tolerance:e}")]
    NotSymmetric { violation: f64, tolerance: f64 },

    #[error("nonzero diagonal entry {value:e} at index {index}")]
    NonzeroDiagonal { index: usize, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("spectral estimate did not converge after {iterations} iterations (last estimate {estimate:e})")]
    SpectralNotConverged { iterations: usize, estimate: f64 },

    #[error("objective value oracle required for {0}")]
    MissingValueOracle(&'static str),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("step-size precondition violated: {0}")]
    StepSize(String),

    #[error(
        "Lyapunov value increased for {steps} consecutive steps ending at iteration {iteration} \
         although the step-size guarantee holds"
    )]
    Divergence { iteration: usize, steps: usize },

    #[error("singular system in {0}")]
    Singular(&'static str),

    #[error("oracle sanity check failed: {0}")]
    OracleCheck(String),

    #[error("not positive definite: {0}")]
    NotPositiveDefinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn check_finite(v: &nalgebra::DVector<f64>, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
