//! Worker pool for ensembles. Results always come back in input order, so the
//! pool size never changes the output.

use ecomarket_core::ecology::community::{ReturnOracle, SimulatedReturns};
use ecomarket_core::{Result as CoreResult, WealthVector};
use rayon::prelude::*;

use crate::error::{HarnessError, Result};

/// Environment variable holding the worker count; unset or 0 means one per core.
pub const THREADS_ENV: &str = "ECOMARKET_THREADS";

pub fn threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

/// Runs `f` inside a pool sized by [`THREADS_ENV`]. Returns the result and the
/// number of workers used.
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<(R, usize)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads())
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
    let n = pool.current_num_threads();
    Ok((pool.install(f), n))
}

pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}

/// [`SimulatedReturns`] evaluated across the pool.
#[derive(Debug, Clone)]
pub struct ParallelReturns(pub SimulatedReturns);

impl ReturnOracle for ParallelReturns {
    fn returns(&self, w: &WealthVector, seed: u64) -> CoreResult<[f64; 3]> {
        self.0.returns(w, seed)
    }

    fn returns_batch(&self, jobs: &[(WealthVector, u64)]) -> Vec<CoreResult<[f64; 3]>> {
        par_map(jobs, |(w, s)| self.0.returns(w, *s))
    }
}
