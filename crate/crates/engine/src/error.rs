use thiserror::Error;
use vizketch_core::CoreError;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("worker lost: {0}")]
    WorkerLost(String),
    #[error("source missing for dataset `{dataset}`: {detail}")]
    SourceMissing { dataset: String, detail: String },
    #[error("execution cancelled")]
    Cancelled,
    #[error("redo log: {0}")]
    Log(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;

impl EngineError {
    /// Stable identifier clients can match on.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::UnknownDataset(_) => "UNKNOWN_DATASET",
            EngineError::BadRequest(_) | EngineError::Core(_) => "BAD_REQUEST",
            EngineError::WorkerLost(_) => "WORKER_LOST",
            EngineError::SourceMissing { .. } => "SOURCE_MISSING",
            EngineError::Cancelled => "CANCELLED",
            EngineError::Log(_) => "LOG_FAILURE",
            EngineError::Protocol(_) => "PROTOCOL",
        }
    }

    /// Rebuilds an error received from another node.
    pub fn from_code(code: &str, detail: String) -> EngineError {
        match code {
            "UNKNOWN_DATASET" => EngineError::UnknownDataset(detail),
            "BAD_REQUEST" => EngineError::BadRequest(detail),
            "SOURCE_MISSING" => EngineError::SourceMissing { dataset: String::new(), detail },
            "CANCELLED" => EngineError::Cancelled,
            "LOG_FAILURE" => EngineError::Log(detail),
            "PROTOCOL" => EngineError::Protocol(detail),
            _ => EngineError::WorkerLost(detail),
        }
    }

    /// Message text without the variant prefix, for the wire.
    pub fn detail(&self) -> String {
        match self {
            EngineError::UnknownDataset(s)
            | EngineError::BadRequest(s)
            | EngineError::WorkerLost(s)
            | EngineError::Log(s)
            | EngineError::Protocol(s) => s.clone(),
            other => other.to_string(),
        }
    }
}
