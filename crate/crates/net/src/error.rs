use doa_core::DoaError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    /// Tensor or parameter shapes do not line up.
    #[error("shape error: {0}")]
    Shape(String),
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// Training produced a non-finite loss.
    #[error("training diverged: {0}")]
    Diverged(String),
    /// Malformed, truncated or incompatible checkpoint / dataset file.
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Core(#[from] DoaError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = NetError> = std::result::Result<T, E>;

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(NetError::Shape(msg.into()))
}

pub(crate) fn domain_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(NetError::Domain(msg.into()))
}
