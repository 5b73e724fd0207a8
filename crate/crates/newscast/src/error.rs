use std::path::Path;

use newscast_core::{Error as CoreError, ErrorClass};
use thiserror::Error;

pub type AppResult<T> = Result<T, AppError>;

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("bad command line: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error("snapshot {path}: {message}")]
    Snapshot { path: String, message: String },

    /// A request field failed validation.
    #[error("{field}: {message}")]
    Field {
        field: &'static str,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl AppError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn snapshot(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        AppError::Snapshot {
            path: path.as_ref().display().to_string(),
            message: message.into(),
        }
    }

    pub fn field(field: &'static str, message: impl Into<String>) -> Self {
        AppError::Field {
            field,
            message: message.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            AppError::Core(e) => e.class(),
            AppError::Io { .. } => ErrorClass::Io,
            AppError::Usage(_)
            | AppError::Config(_)
            | AppError::Snapshot { .. }
            | AppError::Field { .. } => ErrorClass::Input,
        }
    }

    /// Process exit status; 2 is left to usage errors, as clap does.
    pub fn exit_code(&self) -> u8 {
        if let AppError::Usage(_) = self {
            return 2;
        }
        match self.class() {
            ErrorClass::Io => 3,
            ErrorClass::Input => 4,
            ErrorClass::Domain => 5,
            ErrorClass::Lookup => 6,
            ErrorClass::Convergence => 7,
            ErrorClass::InsufficientHistory => 8,
        }
    }
}
