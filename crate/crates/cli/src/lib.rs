//! Command-line driver: scenario configs, seeded runs, JSON reports and CSV
//! traces.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;

pub use args::Cli;
pub use commands::run;
pub use config::{ConfigIssue, ScenarioConfig};
pub use error::{CliError, EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, EXIT_OVERFLOW};
