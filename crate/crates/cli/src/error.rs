use std::fmt;

/// Failures of the runner, each with its process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Unreadable or invalid configuration; nothing was computed.
    Config(String),
    /// A scenario failed inside the numerical core.
    Numerical {
        scenario: String,
        module: String,
        operation: String,
        message: String,
    },
    /// Output could not be written.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical {
                scenario,
                module,
                operation,
                message,
            } => write!(f, "numerical failure in scenario '{scenario}' ({module}::{operation}): {message}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}
