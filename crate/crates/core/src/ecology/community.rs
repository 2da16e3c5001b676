//! Density dependence of strategy returns: community matrix, food web and
//! trophic levels.
//!
//! Returns are measured in constant-wealth markets. Because demand is linear in
//! wealth and supply scales with total wealth, a market depends only on relative
//! wealth, so removing a strategy is the same as renormalising the others.

use alloc::vec::Vec;

use crate::ecology::simplex::WealthVector;
use crate::ecology::stats::avg_return;
use crate::engine::{run, RunConfig, RunMode, RunOutcome};
use crate::error::{Error, Result};

/// Long-run annualised returns of (NT, VI, TF) for one wealth vector and seed.
/// Entries for strategies with zero wealth are NaN.
pub trait ReturnOracle {
    fn returns(&self, w: &WealthVector, seed: u64) -> Result<[f64; 3]>;

    /// Evaluates many independent jobs; implementations may run them in parallel.
    fn returns_batch(&self, jobs: &[(WealthVector, u64)]) -> Vec<Result<[f64; 3]>> {
        jobs.iter().map(|(w, s)| self.returns(w, *s)).collect()
    }
}

/// Measures returns by simulation in constant-wealth mode.
#[derive(Debug, Clone)]
pub struct SimulatedReturns {
    pub base: RunConfig,
    pub total_wealth: f64,
}

impl SimulatedReturns {
    pub fn new(base: RunConfig) -> Self {
        let total_wealth = base.endowment.iter().sum();
        Self { base, total_wealth }
    }

    pub fn config_for(&self, w: &WealthVector, seed: u64) -> RunConfig {
        let mut cfg = self.base.clone().with_wealth(*w, self.total_wealth);
        cfg.mode = RunMode::ConstantWealth;
        cfg.seed = seed;
        cfg
    }
}

impl ReturnOracle for SimulatedReturns {
    fn returns(&self, w: &WealthVector, seed: u64) -> Result<[f64; 3]> {
        let cfg = self.config_for(w, seed);
        let out = run(&cfg)?;
        match out.outcome {
            RunOutcome::Completed => {}
            RunOutcome::Failed(e) => return Err(e),
            RunOutcome::Insolvent { t, funds } => return Err(Error::Insolvency { funds, t }),
        }
        let mut r = [f64::NAN; 3];
        for (i, series) in out.funds.iter().take(3).enumerate() {
            if cfg.endowment[i] > 0.0 {
                r[i] = avg_return(&series.ret[cfg.warmup.min(series.ret.len())..])?;
            }
        }
        Ok(r)
    }
}

/// Mean and standard error of `xs`, ignoring NaN entries.
fn mean_se(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = xs.filter(|x| x.is_finite()).collect();
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var / n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityMatrix {
    /// `g[i][j]`: change in the annual return of `i` per unit relative wealth of `j`.
    pub g: [[f64; 3]; 3],
    pub std_err: [[f64; 3]; 3],
    pub h: f64,
    pub seeds: usize,
}

impl CommunityMatrix {
    pub fn t_stat(&self, i: usize, j: usize) -> f64 {
        self.g[i][j] / self.std_err[i][j]
    }
}

/// Central finite-difference community matrix at `base`. The same seeds are used
/// on both sides of every difference.
pub fn community_matrix(
    oracle: &dyn ReturnOracle,
    base: &WealthVector,
    h: f64,
    seeds: &[u64],
) -> Result<CommunityMatrix> {
    if !(h > 0.0) || seeds.is_empty() {
        return Err(Error::InvalidConfig(
            "community matrix needs h > 0 and at least one seed".into(),
        ));
    }
    let mut jobs = Vec::with_capacity(6 * seeds.len());
    for j in 0..3 {
        let up = base.perturbed(j, h)?;
        let down = base.perturbed(j, -h)?;
        for s in seeds {
            jobs.push((up, *s));
            jobs.push((down, *s));
        }
    }
    let results = oracle
        .returns_batch(&jobs)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut g = [[0.0; 3]; 3];
    let mut std_err = [[0.0; 3]; 3];
    let n = seeds.len();
    for j in 0..3 {
        let block = &results[2 * n * j..2 * n * (j + 1)];
        for i in 0..3 {
            let diffs = block
                .chunks(2)
                .map(|pair| (pair[0][i] - pair[1][i]) / (2.0 * h));
            let (m, se) = mean_se(diffs);
            g[i][j] = m;
            std_err[i][j] = se;
        }
    }
    Ok(CommunityMatrix {
        g,
        std_err,
        h,
        seeds: n,
    })
}

/// How raw food-web entries are scaled before computing trophic levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoodWebNorm {
    /// Raw return differences.
    Raw,
    /// Each positive row scaled to sum to one (diet shares).
    RowSum,
    /// Each entry divided by the predator's own return.
    OwnReturn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoodWeb {
    /// Normalised, non-negative matrix used for trophic levels.
    pub a: [[f64; 3]; 3],
    /// Seed-averaged return lost by `i` when `j` is removed, before clipping.
    pub raw: [[f64; 3]; 3],
    pub std_err: [[f64; 3]; 3],
    /// Seed-averaged returns at the base point.
    pub base_returns: [f64; 3],
}

/// Food-web matrix from removal experiments: `A_ij = max(0, pi_i(w) - pi_i(w without j))`.
/// Entries whose t-statistic across seeds is below `min_t` are treated as zero.
pub fn food_web_matrix(
    oracle: &dyn ReturnOracle,
    base: &WealthVector,
    seeds: &[u64],
    norm: FoodWebNorm,
    min_t: f64,
) -> Result<FoodWeb> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig(
            "food web needs at least one seed".into(),
        ));
    }
    let w = base.as_array();
    let mut points = Vec::with_capacity(4);
    points.push(*base);
    for j in 0..3 {
        let mut removed = w;
        removed[j] = 0.0;
        points.push(WealthVector::normalized(removed)?);
    }
    let jobs: Vec<(WealthVector, u64)> = points
        .iter()
        .flat_map(|p| seeds.iter().map(move |s| (*p, *s)))
        .collect();
    let results = oracle
        .returns_batch(&jobs)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let n = seeds.len();
    let at = |k: usize| &results[n * k..n * (k + 1)];

    let mut base_returns = [0.0; 3];
    for (i, b) in base_returns.iter_mut().enumerate() {
        *b = mean_se(at(0).iter().map(|r| r[i])).0;
    }
    let mut raw = [[0.0; 3]; 3];
    let mut std_err = [[0.0; 3]; 3];
    let mut a = [[0.0; 3]; 3];
    for j in 0..3 {
        for i in 0..3 {
            if i == j || w[i] == 0.0 || w[j] == 0.0 {
                continue;
            }
            let diffs = at(0).iter().zip(at(j + 1)).map(|(b, r)| b[i] - r[i]);
            let (m, se) = mean_se(diffs);
            raw[i][j] = m;
            std_err[i][j] = se;
            let significant = if se > 0.0 { m / se >= min_t } else { m > 0.0 };
            a[i][j] = if significant { m.max(0.0) } else { 0.0 };
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        match norm {
            FoodWebNorm::Raw => {}
            FoodWebNorm::RowSum => {
                let s: f64 = row.iter().sum();
                if s > 0.0 {
                    row.iter_mut().for_each(|x| *x /= s);
                }
            }
            FoodWebNorm::OwnReturn => {
                let own = base_returns[i].abs();
                if own > 0.0 {
                    row.iter_mut().for_each(|x| *x /= own);
                }
            }
        }
    }
    Ok(FoodWeb {
        a,
        raw,
        std_err,
        base_returns,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrophicResult {
    Levels([f64; 3]),
    /// The fixed-point iteration diverges: the food web contains a cycle.
    Undefined,
}

pub const TROPHIC_TOL: f64 = 1e-10;
pub const TROPHIC_MAX_ITER: usize = 10_000;

/// Solves `T = 1 + A T` by fixed-point iteration from `T = 1`.
pub fn trophic_levels(a: &[[f64; 3]; 3]) -> TrophicResult {
    let mut t = [1.0; 3];
    for _ in 0..TROPHIC_MAX_ITER {
        let mut next = [1.0; 3];
        for (i, n) in next.iter_mut().enumerate() {
            *n += (0..3).map(|j| a[i][j] * t[j]).sum::<f64>();
        }
        let delta = (0..3).map(|i| (next[i] - t[i]).abs()).fold(0.0, f64::max);
        t = next;
        if !delta.is_finite() {
            return TrophicResult::Undefined;
        }
        if delta < TROPHIC_TOL {
            return TrophicResult::Levels(t);
        }
    }
    TrophicResult::Undefined
}
