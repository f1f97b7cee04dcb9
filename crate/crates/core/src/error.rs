use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A file could not be decoded. `offset` is the byte position where decoding stopped.
    #[error("format error in {field} at byte {offset}: {message}")]
    Format {
        field: &'static str,
        offset: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Superpixel generation or another algorithm could not produce a result.
    #[error("algorithm failure: {0}")]
    Algorithm(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(field: &'static str, offset: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            field,
            offset,
            message: msg.into(),
        }
    }
}
