//! Command-line front end: TOML configs in, CSV tables out.

pub mod commands;
pub mod config;

pub use commands::{CliError, CliResult};
pub use config::RunConfig;
