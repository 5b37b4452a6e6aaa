//! Library half of the `ppd` command-line tool.

pub mod commands;
pub mod error;
pub mod files;
pub mod sim_config;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult};
