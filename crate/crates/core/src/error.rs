use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("malformed file {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("checksum mismatch in {0}")]
    Checksum(PathBuf),

    #[error("count overflow: {0}")]
    Overflow(String),

    #[error("treelet size {0} exceeds the supported maximum")]
    SizeOverflow(usize),

    #[error("enumeration exceeds the scale guard ({0})")]
    ScaleGuard(String),

    #[error("tables do not match the input: {0}")]
    Mismatch(String),

    #[error("none exist: {0}")]
    NoneExist(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code for the error class: 2 usage, 3 I/O, 4 capacity, 5 mismatch.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::Parse { .. }
            | Error::EmptyGraph
            | Error::Io { .. }
            | Error::Format { .. }
            | Error::Checksum(_) => 3,
            Error::Overflow(_) | Error::SizeOverflow(_) | Error::ScaleGuard(_) => 4,
            Error::Mismatch(_) => 5,
            Error::NoneExist(_) => 1,
        }
    }
}
