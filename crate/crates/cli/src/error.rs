use std::fmt;

use elm_uq::ElmError;

/// CLI failure, carrying the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config keys or parameter values (exit 1).
    Usage(String),
    /// Unreadable or malformed input files, write failures (exit 2).
    Data(String),
    /// Numerical failure inside fitting or estimation (exit 3).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn data(context: impl fmt::Display, err: impl fmt::Display) -> Self {
        CliError::Data(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

impl From<ElmError> for CliError {
    fn from(e: ElmError) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else if matches!(e, ElmError::Dimension(_)) {
            CliError::Data(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
