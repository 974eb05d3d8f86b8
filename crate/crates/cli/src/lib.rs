//! Command-line front end: scenario files in, tables and CSV out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Cli, Command};
pub use error::CliError;
