//! Experiment runner for the aclab analysis library.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{run, Command};
pub use config::ExperimentConfig;
pub use error::CliError;
pub use report::{Report, Verdict};
