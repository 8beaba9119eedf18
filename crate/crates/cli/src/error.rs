use std::fmt;

use afield_core::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed files, out-of-domain parameters.
    Config(String),
    /// Solver breakdown: non-finite energies or a stalled line search.
    Numerical(String),
    /// A hard check in `verify` failed.
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Numerical(_) => 2,
            Self::Invariant(_) => 3,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "{m}"),
            Self::Numerical(m) => write!(f, "{m}"),
            Self::Invariant(m) => write!(f, "invariant violated: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NumericalFailure { .. } | Error::Stalled { .. } | Error::Consistency(_) => {
                Self::Numerical(e.to_string())
            }
            Error::Config(_) | Error::Domain(_) => Self::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Config(format!("I/O error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Config(format!("JSON error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_class() {
        assert_eq!(CliError::from(Error::Config("x".into())).exit_code(), 1);
        assert_eq!(CliError::from(Error::Domain("x".into())).exit_code(), 1);
        assert_eq!(CliError::from(Error::Stalled { iteration: 3, halvings: 60 }).exit_code(), 2);
        let nan = Error::NumericalFailure { iteration: 1, message: "NaN".into() };
        assert_eq!(CliError::from(nan).exit_code(), 2);
        assert_eq!(CliError::Invariant("c".into()).exit_code(), 3);
    }
}
