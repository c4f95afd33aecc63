//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by domain validation and numerical routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter violates its domain (nonpositive rate, probability
    /// outside `[0,1]`, ...). The message names the offending quantity.
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix/operator shapes or bases are incompatible.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A spectral routine hit (numerically) repeated eigenvalues.
    #[error("degenerate spectrum: {0}")]
    Degenerate(String),

    /// A matrix that must be invertible is singular within tolerance.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// A requested quantity is not defined for this object
    /// (e.g. a density for a Laplace-only law).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A truncated sum or iteration did not reach the requested precision.
    #[error("precision not reached: {0}")]
    Precision(String),

    /// A factorization has no valid (positive semi-definite) solution.
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

/// Checks `value > 0` and is finite, otherwise reports `name` in the error.
pub(crate) fn require_positive(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::domain(format!("{name} must be positive, got {value}")));
    }
    Ok(())
}

/// Checks `value >= 0` and finite.
pub(crate) fn require_nonneg(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::domain(format!(
            "{name} must be non-negative, got {value}"
        )));
    }
    Ok(())
}
