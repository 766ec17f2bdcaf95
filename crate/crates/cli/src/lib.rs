//! Configuration, experiment runner and run comparison behind the `hetqfl` binary.

pub mod compare;
pub mod config;
pub mod runner;

pub use config::{ConfigError, ExperimentConfig};
pub use runner::{run, RunError, RunOutput};
