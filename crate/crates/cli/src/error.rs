use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes, one per failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(i32)]
pub enum ExitCode {
    Other = 1,
    Usage = 2,
    MissingFile = 3,
    Parse = 4,
    InvalidConfig = 5,
    DegenerateDataset = 6,
    InvalidInput = 7,
}

pub const EXIT_CODES_HELP: &str = "\
Exit codes:
  0  success
  1  internal error
  2  usage error
  3  missing or unreadable input file
  4  input parse failure
  5  invalid MLC configuration
  6  degenerate dataset (no windows, or fewer than 2 classes)
  7  invalid input values";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        source: har_core::Error,
    },

    #[error("degenerate dataset: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Core(#[from] har_core::Error),
}

fn core_code(e: &har_core::Error) -> ExitCode {
    match e {
        har_core::Error::Parse { .. } => ExitCode::Parse,
        har_core::Error::Config(_) => ExitCode::InvalidConfig,
        har_core::Error::Validation(_) => ExitCode::InvalidInput,
        har_core::Error::Io(_) => ExitCode::MissingFile,
        har_core::Error::Contract(_) => ExitCode::Other,
    }
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Read { .. } => ExitCode::MissingFile,
            CliError::Write { .. } => ExitCode::Other,
            CliError::Input { source, .. } => core_code(source),
            CliError::Degenerate(_) => ExitCode::DegenerateDataset,
            CliError::Core(e) => core_code(e),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
