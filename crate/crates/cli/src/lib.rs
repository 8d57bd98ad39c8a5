//! Command implementations behind the `har` binary.
//!
//! Every command is a plain function over paths and options so the
//! binary, the integration tests and the acceptance suite run the same code.

pub mod commands;
pub mod error;
pub mod output;
pub mod synth;

pub use error::{CliError, ExitCode};
