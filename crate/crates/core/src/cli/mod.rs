//! Experiment runner behind the `polygame` binary.
//!
//! Subcommands map onto the submodules: [`run`] and [`sweep`] execute
//! [`config::RunConfig`] files, [`verify`] runs the property suites and
//! [`plot`] renders CSV output to SVG.

pub mod config;
pub mod plot;
pub mod run;
pub mod sweep;
pub mod verify;

use std::fmt;

/// Failure of a CLI command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad or unreadable input (exit code 1).
    Config(String),
    /// Numerical or I/O failure while executing (exit code 2).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub(crate) fn config(msg: impl fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }

    pub(crate) fn runtime(msg: impl fmt::Display) -> Self {
        CliError::Runtime(msg.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;
