//! Front end for the epnozzle solvers: run configurations, subcommands and artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

pub use config::{parse_config, Artifact, RunConfig};
pub use error::{CliError, CliResult};
