use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("referential integrity: {0}")]
    ReferentialIntegrity(String),

    #[error("{0}")]
    Domain(String),

    #[error("unknown {kind} `{id}`")]
    Lookup { kind: &'static str, id: String },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("shelf-life undefined for `{0}`: no visits within the horizon")]
    UndefinedShelfLife(String),

    #[error("solver did not converge after {iterations} iterations (violation {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("insufficient history: missing panel dates {}", format_dates(.missing))]
    InsufficientHistory { missing: Vec<NaiveDate> },
}

/// Coarse error classes, used to map failures to process exit codes and
/// HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Io,
    Input,
    Domain,
    Lookup,
    Convergence,
    InsufficientHistory,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } => ErrorClass::Io,
            Error::Parse { .. } | Error::Validation(_) | Error::ReferentialIntegrity(_) => {
                ErrorClass::Input
            }
            Error::Domain(_) | Error::UndefinedCorrelation(_) | Error::UndefinedShelfLife(_) => {
                ErrorClass::Domain
            }
            Error::Lookup { .. } => ErrorClass::Lookup,
            Error::Convergence { .. } => ErrorClass::Convergence,
            Error::InsufficientHistory { .. } => ErrorClass::InsufficientHistory,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

fn format_dates(dates: &[NaiveDate]) -> String {
    const SHOWN: usize = 5;
    let mut out: Vec<String> = dates.iter().take(SHOWN).map(|d| d.to_string()).collect();
    if dates.len() > SHOWN {
        out.push(format!("... ({} total)", dates.len()));
    }
    out.join(", ")
}
