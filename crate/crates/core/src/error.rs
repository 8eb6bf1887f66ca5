use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate document id {id:?} on lines {first} and {second}")]
    DuplicateId {
        id: String,
        first: usize,
        second: usize,
    },

    #[error("unsupported seed pattern {0:?}: only a trailing '*' wildcard is supported")]
    UnsupportedPattern(String),

    #[error("cluster assignment is empty")]
    EmptyAssignment,

    #[error("{} cluster member(s) missing from the corpus: {}", .0.len(), .0.join(", "))]
    MissingMembers(Vec<String>),

    #[error("vocabulary is empty (min_df = {min_df}); try a smaller min_df")]
    EmptyVocabulary { min_df: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("vocabulary checksum mismatch: expected {expected}, found {found}")]
    VocabularyMismatch { expected: String, found: String },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }
}
