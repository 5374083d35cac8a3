//! Error type shared by every module in the crate.

use thiserror::Error;

/// Unified error enum for covariance validation, conditioning, and
/// equilibrium computation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A matrix argument is unusable as supplied (non-finite entries,
    /// asymmetric beyond tolerance, ...).
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    /// A covariance assembly is not a valid covariance matrix.
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    /// A matrix required to be positive definite is not (within tolerance).
    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// Block or argument dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    InvalidDimensions(String),

    /// The block being conditioned on (or inverted) is singular beyond
    /// tolerance.
    #[error("singular conditioning block: {0}")]
    SingularConditioning(String),

    /// Requested message covariances cannot be realized by any feasible
    /// sensor policy (the implied message noise covariance has a negative
    /// eigenvalue beyond tolerance).
    #[error("infeasible message covariances: {0}")]
    InfeasibleMessage(String),

    /// A filter innovation covariance is singular, so no update gain exists.
    #[error("singular innovation covariance: {0}")]
    SingularInnovation(String),

    /// The configuration falls outside the regime the closed-form
    /// construction supports.
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    /// The other sensors' declared policies leave no feasible response for
    /// the remaining sensor.
    #[error("infeasible opponent profile: {0}")]
    InfeasibleOthers(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
