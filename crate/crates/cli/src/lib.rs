//! Command-line front end for the specaug operators and verification suite.

pub mod commands;
pub mod config;
pub mod error;
pub mod sidecar;
pub mod verify;

pub use commands::{execute, replay, Outcome};
pub use config::{CommandKind, RunArgs, RunConfig};
pub use error::{CliError, ExitStatus};
