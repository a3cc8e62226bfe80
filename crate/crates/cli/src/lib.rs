//! Command-line front end for the `spinbath` simulator.
//!
//! Exit codes: 0 on success, 2 for configuration errors (bad flags, config
//! file or values), 1 for failures while computing or writing.

pub mod args;
pub mod commands;
pub mod config;

use spinbath::dynamics::DynamicsError;
use thiserror::Error;

pub use args::Cli;
pub use commands::run;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::InvalidConfig(_) | DynamicsError::UnsupportedTarget(_) | DynamicsError::Pulse(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}
