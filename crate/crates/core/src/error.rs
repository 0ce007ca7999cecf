use thiserror::Error;

/// Failure modes shared by every module of the lab.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Adaptive quadrature hit its subdivision limit.
    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e} after {panels} panels")]
    Quadrature {
        estimate: f64,
        error_bound: f64,
        panels: usize,
    },

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NonSymmetric { max_asymmetry: f64 },

    /// A truncated product or set was queried outside the range its truncation supports.
    #[error("truncation too small: {0}")]
    Truncation(String),

    /// A computed quantity failed a numerical sanity check (solver breakdown, clipping).
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures caused by the caller's inputs rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::NonSymmetric { .. } | Error::Truncation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
