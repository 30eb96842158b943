//! Command-line front end for `fracwave`: configuration parsing, subcommand
//! dispatch and report serialization.

pub mod commands;
pub mod config;

use std::fmt;
use std::path::Path;

pub use config::{parse_config, ConfigError, RunConfig, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CRITERION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    /// Bad input files or parameter values rejected by the library.
    Usage(String),
    Io(String),
    /// Blow-up, non-convergence or a failed eigensolve.
    Numerical(String),
    /// `verify` ran to completion and this many criteria failed.
    CriterionFailed(usize),
}

impl CliError {
    pub fn input(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Usage(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Clap(e)) if !e.use_stderr() => EXIT_OK,
            CliError::Config(_) | CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::CriterionFailed(_) => EXIT_CRITERION,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Io(m) | CliError::Numerical(m) => write!(f, "{m}"),
            CliError::CriterionFailed(n) => write!(f, "{n} acceptance criterion/criteria failed"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<fracwave::Error> for CliError {
    fn from(e: fracwave::Error) -> Self {
        use fracwave::Error as E;
        match e {
            E::InvalidGrid(_)
            | E::InvalidParameter { .. }
            | E::LengthMismatch { .. }
            | E::GridMismatch
            | E::Format(_)
            | E::Csv(_)
            | E::Json(_) => CliError::Usage(e.to_string()),
            E::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

/// Size the global worker pool, then run the configured subcommand.
pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    if let Some(n) = cfg.jobs {
        // Only the first call can size the global pool; later calls (tests
        // running several commands in one process) keep the existing one.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    commands::run(cfg)
}
