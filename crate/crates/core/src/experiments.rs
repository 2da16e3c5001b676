//! Per-run reductions shared by the Monte Carlo experiments: wealth trajectories,
//! ensemble convergence and the Kelly tests. Running the ensembles (and any
//! parallelism) is left to the caller.

use alloc::vec::Vec;
use core::ops::Range;

use rand_distr::{Distribution, Exp1};

use crate::ecology::divergence::{fit_gaussian, kl_between};
use crate::ecology::simplex::WealthVector;
use crate::engine::{RunOutcome, RunOutput};
use crate::error::{Error, Result};
use crate::params::STEPS_PER_YEAR;
use crate::rng::substream;
use crate::strategies::StrategyKind;

pub const INIT_STREAM: &str = "initial-wealth";

/// Uniform draw from the wealth simplex for run `run_index`.
pub fn uniform_simplex_point(seed: u64, run_index: u64) -> WealthVector {
    let mut rng = substream(seed, INIT_STREAM, run_index);
    loop {
        let e: [f64; 3] = core::array::from_fn(|_| Exp1.sample(&mut rng));
        if let Ok(w) = WealthVector::normalized(e) {
            return w;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Relative wealth at steps `0, every, 2*every, ...` up to the horizon. After
    /// an insolvency or a failed step the last state is carried forward.
    pub samples: Vec<[f64; 3]>,
    pub every: usize,
    /// Step at which a fund became insolvent.
    pub insolvent_at: Option<usize>,
    pub failed: bool,
}

impl Trajectory {
    pub fn terminal(&self) -> [f64; 3] {
        *self
            .samples
            .last()
            .expect("a trajectory holds its initial state")
    }

    /// Time in years of sample `k`.
    pub fn year(&self, k: usize) -> f64 {
        (k * self.every) as f64 / STEPS_PER_YEAR as f64
    }
}

/// Samples the relative wealth of a run every `every` steps.
pub fn sample_trajectory(
    out: &RunOutput,
    initial: &WealthVector,
    horizon: usize,
    every: usize,
) -> Trajectory {
    let every = every.max(1);
    let mut samples = Vec::with_capacity(horizon / every + 1);
    samples.push(initial.as_array());
    let mut last = initial.as_array();
    for t in (every..=horizon).step_by(every) {
        if t <= out.len() {
            let w = out.wealth_vector(t - 1);
            if w.iter().all(|x| x.is_finite()) {
                last = w;
            }
        } else if !out.is_empty() {
            let w = out.wealth_vector(out.len() - 1);
            if w.iter().all(|x| x.is_finite()) {
                last = w;
            }
        }
        samples.push(last);
    }
    let (insolvent_at, failed) = match &out.outcome {
        RunOutcome::Completed => (None, false),
        RunOutcome::Insolvent { t, .. } => (Some(*t), false),
        RunOutcome::Failed(_) => (None, true),
    };
    Trajectory {
        samples,
        every,
        insolvent_at,
        failed,
    }
}

/// Which two wealth shares enter the Gaussian fit; the third is implied.
pub const KL_COMPONENTS: [usize; 2] = [0, 1];

fn project(w: &[f64; 3]) -> Vec<f64> {
    KL_COMPONENTS.iter().map(|&i| w[i]).collect()
}

/// Divergence of the ensemble state at each sample index from the ensemble
/// pooled over the sample indices in `reference`.
pub fn kl_curve(trajectories: &[Trajectory], reference: Range<usize>) -> Result<Vec<f64>> {
    let len = trajectories
        .iter()
        .map(|t| t.samples.len())
        .min()
        .unwrap_or(0);
    if len == 0 || reference.is_empty() || reference.end > len {
        return Err(Error::InvalidConfig(
            "reference window outside the sampled horizon".into(),
        ));
    }
    let pooled: Vec<Vec<f64>> = trajectories
        .iter()
        .flat_map(|tr| tr.samples[reference.clone()].iter().map(project))
        .collect();
    let reference = fit_gaussian(&pooled)?;
    (0..len)
        .map(|k| {
            let at: Vec<Vec<f64>> = trajectories
                .iter()
                .map(|tr| project(&tr.samples[k]))
                .collect();
            kl_between(&fit_gaussian(&at)?, &reference)
        })
        .collect()
}

/// Annualised mean log return of the Kelly fund after the warm-up. Returns
/// `None` when the run carries no Kelly fund.
pub fn kelly_log_return(out: &RunOutput) -> Option<f64> {
    let series = out.fund(StrategyKind::Kelly)?;
    let r: Vec<f64> = series.ret[out.warmup.min(series.ret.len())..]
        .iter()
        .copied()
        .filter(|x| x.is_finite())
        .collect();
    if r.is_empty() {
        return None;
    }
    // a total loss is clamped so the average stays finite
    let sum: f64 = r
        .iter()
        .map(|x| libm::log(libm::fmax(1.0 + x, 1e-12)))
        .sum();
    Some(sum / r.len() as f64 * STEPS_PER_YEAR as f64)
}

/// First step at which each fund of a run stopped being solvent.
pub fn death_times(out: &RunOutput) -> Vec<Option<usize>> {
    out.funds
        .iter()
        .map(|f| {
            let started = f.wealth.first().is_some_and(|w| w.is_finite());
            if !started {
                return None;
            }
            f.wealth.iter().position(|w| !(*w > 0.0)).map(|i| i + 1)
        })
        .collect()
}

/// Fraction of runs in which a fund is still solvent at each step in `times`.
/// Runs where the fund was never present are ignored.
pub fn survival_curve(deaths: &[Option<usize>], present: &[bool], times: &[usize]) -> Vec<f64> {
    let n = present.iter().filter(|p| **p).count();
    times
        .iter()
        .map(|&t| {
            if n == 0 {
                return f64::NAN;
            }
            let alive = deaths
                .iter()
                .zip(present)
                .filter(|(d, p)| **p && d.is_none_or(|d| d > t))
                .count();
            alive as f64 / n as f64
        })
        .collect()
}
