//! Command-line front end: experiment files, presets and CSV reports.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::{preset, ExperimentConfig, PRESETS};
pub use error::CliError;
