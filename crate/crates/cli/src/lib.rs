//! Configuration, subcommands and output writers behind the `pamfk` binary.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::RunError;
pub use config::{ConfigError, ExperimentConfig};
