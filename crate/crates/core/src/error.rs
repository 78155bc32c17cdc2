use std::path::Path;

use thiserror::Error;

use crate::autodiff::TensorError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("empty token sequence")]
    EmptySequence,
    #[error("{location}: {msg}")]
    Format { location: String, msg: String },
    #[error("tweet id {id:?} missing from feature source {feature_source:?}")]
    Join { id: String, feature_source: String },
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    /// Format error pinned to a 1-based line of a named input.
    pub(crate) fn format_at(source: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            location: format!("{source}:{line}"),
            msg: msg.into(),
        }
    }

    pub(crate) fn format(source: &str, msg: impl Into<String>) -> Self {
        Error::Format {
            location: source.to_string(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            context: path.display().to_string(),
            source,
        }
    }
}
