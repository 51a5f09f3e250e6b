use thiserror::Error;

use crate::value::ValueKind;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("{path}: line {line}: expected {expected} fields, found {found}")]
    Arity {
        path: String,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: u64,
        column: String,
        message: String,
    },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` already exists")]
    DuplicateColumn(String),
    #[error("column `{column}` has kind {actual}, expected {expected}")]
    KindMismatch {
        column: String,
        expected: String,
        actual: ValueKind,
    },
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("invalid regular expression: {0}")]
    Regex(#[from] regex::Error),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("summary kinds do not match: {0} vs {1}")]
    SummaryMismatch(&'static str, &'static str),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("encoding error: {0}")]
    Encoding(String),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;

impl CoreError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CoreError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CoreError::InvalidRequest(msg.into())
    }

    pub(crate) fn kind_mismatch(column: &str, expected: &str, actual: ValueKind) -> Self {
        CoreError::KindMismatch {
            column: column.to_owned(),
            expected: expected.to_owned(),
            actual,
        }
    }
}
