use thiserror::Error;

/// Errors raised by the core kernels, the signal model and the estimators.
#[derive(Debug, Error)]
pub enum DoaError {
    /// An input violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative routine failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// An estimator could not produce the requested number of estimates.
    #[error("estimator failure: {0}")]
    Estimator(String),
    /// Malformed or truncated binary file.
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = DoaError> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(DoaError::Domain(msg.into()))
}
