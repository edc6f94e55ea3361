use std::fmt;

use roughchange_core::Error;

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameters. Exit 2.
    Usage(String),
    /// Unreadable input or unwritable output. Exit 3.
    Io(String),
    /// Inputs that must share a pixel grid do not. Exit 4.
    Dimensions(String),
    /// Anything else. Exit 1.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Dimensions(_) => 4,
            CliError::Internal(_) => 1,
        }
    }

    /// Wraps a core error raised while reading or writing `path`.
    pub fn at(path: &std::path::Path, err: Error) -> Self {
        match err {
            Error::Io(e) => CliError::Io(format!("{}: {e}", path.display())),
            Error::Format(msg) => CliError::Io(format!("{}: {msg}", path.display())),
            other => CliError::from(other),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Dimensions(m) | CliError::Internal(m) => {
                f.write_str(m)
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        match err {
            Error::InvalidArgument(_) => CliError::Usage(err.to_string()),
            Error::DimensionMismatch { .. } => CliError::Dimensions(err.to_string()),
            Error::Io(_) | Error::Format(_) => CliError::Io(err.to_string()),
            Error::InvariantViolation(_) => CliError::Internal(err.to_string()),
        }
    }
}
