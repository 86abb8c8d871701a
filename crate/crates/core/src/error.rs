use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    /// A value violated a type invariant.
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("fit failed: {reason} (residual rms {residual_rms:e})")]
    Fit { reason: String, residual_rms: f64 },

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    /// Covariance matrix of the estimator problem is singular along `channel`.
    #[error("singular covariance: channel `{channel}` has no variance")]
    Singular { channel: &'static str },
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }

    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid { field, reason: reason.into() }
    }
}
