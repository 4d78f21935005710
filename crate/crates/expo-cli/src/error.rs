//! Process-level error taxonomy mapped onto exit codes.

use thiserror::Error;

/// A failure the process reports before exiting nonzero.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or unreadable configuration: exit code 2.
    #[error("config error: {0}")]
    Config(String),

    /// Missing, unreadable, or malformed inputs and runtime failures on
    /// otherwise valid configuration: exit code 1.
    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

/// Shorthand for wrapping an error into the config bucket.
pub fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Shorthand for wrapping an error into the data bucket.
pub fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}
