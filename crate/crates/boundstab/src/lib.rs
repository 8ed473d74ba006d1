//! File formats, configuration, parallel execution and the command-line
//! front end for [`boundstab_core`].
//!
//! The binary is a thin wrapper over [`cli::run_with`], which takes the
//! argument list and two writers and returns the process exit code, so the
//! whole command line can be driven from tests.

pub mod cli;
pub mod config;
pub mod exec;
pub mod formats;
pub mod sweep;

pub use cli::run_with;
pub use config::RunConfig;
pub use exec::RayonExecutor;

use thiserror::Error;

/// Version tag written into every JSON report and profile header.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config keys or input files. Exit code 2.
    #[error("usage: {0}")]
    Usage(String),
    /// The computation ran but could not reach a conclusion. Exit code 1.
    #[error("{0}")]
    Failure(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) | CliError::Io(_) => 1,
        }
    }
}
