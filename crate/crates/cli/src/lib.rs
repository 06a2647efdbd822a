//! Experiment runner for `chimera-core`.
//!
//! An experiment is described by a JSON [`config::ExperimentConfig`]; running
//! it writes CSV data files plus a `manifest.json` into an output directory.
//! CSV floats use 17 significant digits so identical inputs give
//! byte-identical payloads.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod sweep;

pub use config::{Experiment, ExperimentConfig};
pub use error::CliError;
pub use pipeline::{run, Manifest};
pub use sweep::seed_sweep;

/// Environment variable that overrides the configured output directory.
pub const OUT_ENV: &str = "CHIMERA_Q_OUT";
