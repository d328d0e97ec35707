use doa_core::DoaError;
use doa_net::NetError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    /// Bad command-line input; reported with exit code 1.
    #[error("{0}")]
    Usage(String),
    #[error("unknown preset `{name}`; available presets: {available}")]
    UnknownPreset { name: String, available: String },
    #[error("preset `{preset}` needs a trained network: {hint}")]
    MissingCheckpoint { preset: String, hint: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("malformed result file: {0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] DoaError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    /// Process exit code: 1 for usage errors, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) | BenchError::UnknownPreset { .. } => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

pub(crate) fn domain_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(BenchError::Domain(msg.into()))
}
