//! Std companion of `nhse-core`: run configs, CSV/JSON products, a worker
//! pool for sweeps, and the `nhse` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod parallel;

pub use config::{ModelConfig, Overrides, RunConfig, StateSelector};
pub use error::CliError;
