use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrialError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown image `{0}`")]
    UnknownImage(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("invalid request: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: corrupt log entry: {message}")]
    Log {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl TrialError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TrialError::Io {
            path: path.into(),
            source,
        }
    }
}
