//! Scenario configs, output formats and commands behind the `hvac` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod stats;

pub use config::ScenarioConfig;
pub use error::CliError;
