//! Experiment runner for the kinetic-fluid toolkit: TOML configuration,
//! experiment dispatch and CSV/JSON artifacts.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigErrors, Experiment, RunConfig};
pub use run::{execute, run, write_artifacts, Check, Outcome, RunError, Summary};
