use thiserror::Error;

/// Errors surfaced by the simulator core.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration field failed validation.
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A Rician K-factor of zero was supplied where the correlated LOS model
    /// requires K > 0 (the receive correlation matrix divides by K).
    #[error("rician k_factor must be positive: the receive correlation model is undefined at K = 0")]
    ZeroKFactor,

    /// A Cholesky factorization failed; the matrix was not numerically
    /// positive definite. Carries a crude condition estimate (ratio of the
    /// largest to smallest diagonal magnitude) for diagnostics.
    #[error("linear solve failed: matrix not positive definite (diagonal condition estimate {cond_estimate:.3e})")]
    SolverFailure { cond_estimate: f64 },

    /// The Kalman innovation covariance was singular (only possible when the
    /// measurement noise variance is zero and the predicted covariance has
    /// collapsed).
    #[error("kalman update failed: singular innovation covariance")]
    SingularInnovation,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
