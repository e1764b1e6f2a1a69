use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A reflection was requested at a square corner, where the tangent is undefined.
    #[error("undefined tangent: ({x}, {y}) is a corner of the reflecting square")]
    UndefinedTangent { x: f64, y: f64 },

    #[error("no valid {kind} ray exists for this layout")]
    ExhaustedCandidates { kind: &'static str },

    #[error("ray {index}: {source}")]
    Ray {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line tool: 2 for I/O failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::Ray { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}
