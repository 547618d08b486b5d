use std::fmt;

use impactreg_core::Error as CoreError;

/// Failure of a subcommand, carrying the exit code class.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: unreadable files, malformed data, invalid settings.
    Data(String),
    /// The numerics could not produce an answer for valid input.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    /// Wraps a core error with a context prefix such as a file path.
    pub fn core(context: &str, err: CoreError) -> Self {
        let msg = if context.is_empty() {
            err.to_string()
        } else {
            format!("{context}: {err}")
        };
        if err.is_numerical() {
            CliError::Numerical(msg)
        } else {
            CliError::Data(msg)
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        CliError::core("", err)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
