use std::process::ExitCode;

use thiserror::Error;

/// Failure classes of the binary, one exit code each.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad config, arguments or input files. Exit 2.
    #[error("config error: {0}")]
    Config(String),
    /// A solve or experiment failed to run, or a pass flag is false. Exit 1.
    #[error("experiment failure: {0}")]
    Experiment(String),
    /// Artifacts could not be written. Exit 3.
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Experiment(_) => 1,
            CliError::Config(_) => 2,
            CliError::Output(_) => 3,
        })
    }

    pub fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn experiment(e: impl std::fmt::Display) -> Self {
        CliError::Experiment(e.to_string())
    }

    pub fn output(e: impl std::fmt::Display) -> Self {
        CliError::Output(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
