//! Experiment runner behind the `ctqrw` binary: TOML configs in, CSV tables
//! and a JSON run manifest out.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use presets::figure_preset;
pub use run::{run_experiment, RunError, RunReport};
