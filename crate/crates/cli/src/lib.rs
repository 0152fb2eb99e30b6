//! Command-line frontend for `wittenrate`: JSON run configs, subcommands and
//! CSV/manifest output.
//!
//! Exit codes: 1 validation checks failed, 2 configuration, 3 eigensolver
//! convergence, 4 I/O.

pub mod commands;
pub mod config;

use thiserror::Error;

pub use commands::{cmd_evolve, cmd_rates, cmd_scan, cmd_spectrum, cmd_validate, Outputs};
pub use config::{Problem, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Convergence(String),
    #[error("{0}")]
    Io(String),
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ChecksFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<wittenrate::Error> for CliError {
    fn from(e: wittenrate::Error) -> Self {
        match e {
            wittenrate::Error::Convergence { .. } | wittenrate::Error::Numeric(_) => {
                CliError::Convergence(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
