use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to map failures onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Infeasible,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible budget {budget}: at least {minimum} is needed to give every sample one worker")]
    InfeasibleBudget { budget: f64, minimum: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("enumeration needs {required} allocations, above the cap of {cap}")]
    CapExceeded { required: u128, cap: u128 },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("schema mismatch: {0}")]
    Schema(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io(_) => ErrorKind::Io,
            Error::Parse(_) | Error::Validation(_) | Error::Domain(_) | Error::Alignment(_) | Error::Schema(_) => {
                ErrorKind::Validation
            }
            Error::InfeasibleBudget { .. } | Error::Precondition(_) | Error::CapExceeded { .. } => {
                ErrorKind::Infeasible
            }
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        if err.is_io_error() {
            match err.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                other => Error::Parse(format!("{other:?}")),
            }
        } else {
            Error::Parse(err.to_string())
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        if err.is_io() {
            Error::Io(err.into())
        } else {
            Error::Parse(err.to_string())
        }
    }
}
