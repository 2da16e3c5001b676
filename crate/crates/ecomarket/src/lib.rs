//! Experiment harness around `ecomarket-core`: configuration files, CSV and
//! manifest output, a worker pool, and the experiments behind the CLI.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod pool;

pub use ecomarket_core as core;

pub use config::Config;
pub use error::{HarnessError, Result};
pub use experiments::{Experiment, Outcome};

use std::path::Path;
use std::time::Instant;

use output::{write_outputs, ExperimentManifest, Timing};

/// Runs an experiment in the worker pool and writes its tables and manifest to
/// `dir`.
pub fn run_to_dir(experiment: Experiment, cfg: &Config, dir: &Path) -> Result<ExperimentManifest> {
    cfg.validate()?;
    let start = Instant::now();
    let (outcome, threads) = pool::with_pool(|| experiment.run(cfg))?;
    let outcome = outcome?;
    let timing = Timing {
        wall_seconds: start.elapsed().as_secs_f64(),
        threads,
    };
    write_outputs(
        dir,
        experiment.name(),
        cfg,
        outcome.seeds,
        &outcome.tables,
        timing,
    )
}
