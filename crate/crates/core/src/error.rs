use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A malformed record in an annotation, predictions or runtimes file.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid bounding box: {0}")]
    InvalidBox(String),

    #[error("invalid sequence `{name}`: {message}")]
    InvalidSequence { name: String, message: String },

    #[error("invalid metadata in {path}: {message}")]
    Metadata { path: PathBuf, message: String },

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    /// A quantity that has no defined value for the given input
    /// (empty trace, no eligible frame pair, empty weight list).
    #[error("undefined result: {0}")]
    Undefined(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("tracker `{tracker}` failed at frame {frame}: {message}")]
    Tracker {
        tracker: String,
        frame: usize,
        message: String,
    },

    #[error("unknown tracker `{0}`")]
    UnknownTracker(String),

    #[error("bridge: {0}")]
    Bridge(String),

    #[error("invalid synthetic spec: {0}")]
    Synth(String),

    #[error("stale results: {0}")]
    Stale(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn sequence(name: &str, message: impl Into<String>) -> Self {
        Error::InvalidSequence {
            name: name.to_string(),
            message: message.into(),
        }
    }
}
