use std::path::Path;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A file could not be parsed. Carries the file name and the 1-based
    /// line number of the offending row (the header is line 1).
    #[error("{file}:{row}: {message}")]
    Parse {
        file: String,
        row: u64,
        message: String,
    },

    /// Inputs violate a documented invariant.
    #[error("{0}")]
    Validation(String),

    /// A timestamp string is not valid ISO-8601 UTC.
    #[error("invalid timestamp {0:?}")]
    InvalidTimestamp(String),

    /// A name (channel, detector, ...) is not known in the current context.
    #[error("unknown {kind} {name:?}")]
    UnknownName { kind: &'static str, name: String },

    /// The operation needs at least one included event.
    #[error("no included events to evaluate")]
    NoIncludedEvents,

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn parse(file: &Path, row: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.display().to_string(),
            row,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
