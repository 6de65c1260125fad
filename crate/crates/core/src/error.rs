use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate.
///
/// Variants map onto the failure classes a caller is expected to react to
/// differently: bad inputs, unusable targets, schedule violations and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid target: {0}")]
    InvalidTarget(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("unsupported target: {0}")]
    UnsupportedTarget(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid_arg(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
