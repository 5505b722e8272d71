//! Library side of the `dds` command-line tool.

pub mod commands;
pub mod config;
pub mod output;

/// Failure of a subcommand. Bad input exits with code 1, anything else with 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}
