//! Config-driven driver for the nsp-core experiments.

pub mod config;
pub mod execute;
pub mod report;

use std::path::Path;

pub use config::{Experiment, RunConfig};
pub use execute::{execute, output_dir};

/// Process exit status for an outcome: 0 ok, 2 configuration, 1 otherwise.
pub fn exit_code(result: &nsp_core::Result<()>) -> u8 {
    match result {
        Ok(()) => 0,
        Err(nsp_core::Error::Config(_)) => 2,
        Err(_) => 1,
    }
}

/// Loads the config, applies command-line overrides and runs.
pub fn run(experiment: Experiment, config: &Path, out: Option<&Path>, seed: Option<u64>) -> nsp_core::Result<()> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = output_dir(&cfg, out);
    execute(&cfg, experiment, &dir)
}
