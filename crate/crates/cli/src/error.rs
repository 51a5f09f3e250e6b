use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{code}: {detail}")]
    Execution { code: String, detail: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("{0} acceptance criteria failed")]
    Failed(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for bad arguments, 3 for failed executions, 4 for protocol or
    /// transport failures, 5 for failed acceptance criteria.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Execution { .. } | CliError::Io(_) => 3,
            CliError::Protocol(_) => 4,
            CliError::Failed(_) => 5,
        }
    }

    pub fn from_reply(code: &str, detail: &str) -> CliError {
        if code == "PROTOCOL" {
            CliError::Protocol(detail.to_owned())
        } else {
            CliError::Execution { code: code.to_owned(), detail: detail.to_owned() }
        }
    }
}

impl From<vizketch_engine::EngineError> for CliError {
    fn from(e: vizketch_engine::EngineError) -> Self {
        CliError::from_reply(e.code(), &e.detail())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
