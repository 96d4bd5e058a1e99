//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("duplicate app id {0:?}")]
    DuplicateAppId(String),

    #[error("corpus produced an empty vocabulary (no token of length >= 2 in any description)")]
    EmptyVocabulary,

    #[error("token {0:?} is not in the vocabulary")]
    TokenNotInVocab(String),

    #[error("unknown app id {0:?}")]
    UnknownAppId(String),

    #[error("query terms {0:?} are all out of vocabulary")]
    AllTermsOov(Vec<String>),

    #[error("vector {0} has zero norm")]
    ZeroVector(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("vocabulary fingerprint mismatch: {0}")]
    FingerprintMismatch(String),

    #[error("{path}: bad file format: {msg}")]
    BadFormat { path: String, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn parse(path: &std::path::Path, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn bad_format(path: &std::path::Path, msg: impl Into<String>) -> Self {
        Error::BadFormat {
            path: path.display().to_string(),
            msg: msg.into(),
        }
    }
}
