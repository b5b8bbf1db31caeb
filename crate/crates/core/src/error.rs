use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the mean-field toolkit.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigensolver did not converge after {iterations} iterations ({found} of {dim} eigenvalues found)")]
    EigenNonConvergence {
        iterations: usize,
        dim: usize,
        found: usize,
        /// Eigenvalues deflated before the iteration cap was hit.
        partial: Vec<Complex64>,
    },

    #[error("step size underflow at t = {t}: h = {h:e} (problem may be stiff)")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t}")]
    StepBudget { t: f64, max_steps: usize },

    #[error("spin-norm drift {drift:e} exceeds limit {limit:e}; tighten rtol/atol")]
    NormDrift { drift: f64, limit: f64 },

    #[error("non-finite state encountered at t = {0}")]
    NonFinite(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
