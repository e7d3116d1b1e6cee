use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("failed to read input after {records} records: {source}")]
    Stream {
        records: usize,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    RawIo(#[from] std::io::Error),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("token id {id} out of range for vocabulary of size {size}")]
    TokenOutOfRange { id: usize, size: usize },

    #[error("vocabulary: {0}")]
    Vocabulary(String),

    #[error("template {index} produces a pair rejected by the filters ({reason:?}): {query:?} -> {question:?}")]
    Template {
        index: usize,
        reason: crate::corpus::FilterReason,
        query: String,
        question: String,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("vocabulary hash mismatch: checkpoint has {expected}, vocabulary has {actual}")]
    VocabHash { expected: String, actual: String },

    #[error("annotation: {0}")]
    Annotation(#[from] crate::annotation::AnnotationError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
