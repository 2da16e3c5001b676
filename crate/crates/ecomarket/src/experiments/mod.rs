//! Experiments behind the CLI subcommands. Each one turns a [`Config`] into a
//! set of tables; writing them out is the caller's job.

use std::fmt;
use std::str::FromStr;

use ecomarket_core::ecology::stats::{
    avg_return, log_returns, mispricing, return_autocorrelation, volatility, volatility_total,
};
use ecomarket_core::engine::RunOutput;
use ecomarket_core::params::STEPS_PER_YEAR;
use ecomarket_core::StrategyKind;

use crate::config::Config;
use crate::error::{HarnessError, Result};
use crate::output::Table;

pub mod ecology;
pub mod ensemble;
pub mod facts;
pub mod kelly;
pub mod simulate;
pub mod sweep;

pub const STRATEGIES: [&str; 3] = ["nt", "vi", "tf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Simulate,
    Sweep,
    Trajectories,
    Community,
    Trophic,
    Regress,
    Converge,
    Kelly,
    StylizedFacts,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Simulate,
        Experiment::Sweep,
        Experiment::Trajectories,
        Experiment::Community,
        Experiment::Trophic,
        Experiment::Regress,
        Experiment::Converge,
        Experiment::Kelly,
        Experiment::StylizedFacts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Sweep => "sweep",
            Experiment::Trajectories => "trajectories",
            Experiment::Community => "community",
            Experiment::Trophic => "trophic",
            Experiment::Regress => "regress",
            Experiment::Converge => "converge",
            Experiment::Kelly => "kelly",
            Experiment::StylizedFacts => "stylized-facts",
        }
    }

    pub fn run(self, cfg: &Config) -> Result<Outcome> {
        match self {
            Experiment::Simulate => simulate::simulate(cfg),
            Experiment::Sweep => sweep::sweep(cfg),
            Experiment::Trajectories => ensemble::trajectories(cfg),
            Experiment::Community => ecology::community(cfg),
            Experiment::Trophic => ecology::trophic(cfg),
            Experiment::Regress => ecology::regress(cfg),
            Experiment::Converge => ensemble::converge(cfg),
            Experiment::Kelly => kelly::kelly(cfg),
            Experiment::StylizedFacts => facts::stylized_facts(cfg),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown experiment `{s}`")))
    }
}

/// Tables produced by an experiment and the seeds it used.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub seeds: Vec<u64>,
}

impl Outcome {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Summary statistics of one run after its warm-up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStats {
    /// Annualised geometric mean return per strategy; NaN when absent.
    pub pi: [f64; 3],
    /// Annualised volatility of each strategy's returns.
    pub sd: [f64; 3],
    pub sharpe: [f64; 3],
    /// Lag-one autocorrelation of daily log price returns.
    pub acf1: f64,
    /// Annualised volatility of log price returns.
    pub volatility: f64,
    /// Mean absolute log2 mispricing.
    pub mispricing: f64,
}

pub fn run_stats(out: &RunOutput) -> Result<RunStats> {
    let from = out.warmup.min(out.len());
    let mut pi = [f64::NAN; 3];
    let mut sd = [f64::NAN; 3];
    let mut sharpe = [f64::NAN; 3];
    for (i, kind) in StrategyKind::ECOLOGY.into_iter().enumerate() {
        let Some(series) = out.fund(kind) else {
            continue;
        };
        let r = &series.ret[from..];
        if r.is_empty() || r.iter().any(|x| !x.is_finite()) {
            continue;
        }
        pi[i] = avg_return(r)?;
        let n = r.len() as f64;
        let mean = r.iter().sum::<f64>() / n;
        let var = r.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        sd[i] = (var * STEPS_PER_YEAR as f64).sqrt();
        sharpe[i] = ecomarket_core::ecology::stats::sharpe(r).unwrap_or(f64::NAN);
    }
    let prices = &out.price[from.saturating_sub(1)..];
    let lr = log_returns(prices)?;
    let acf1 = return_autocorrelation(&lr, 1).unwrap_or(f64::NAN);
    let volatility = volatility_total(prices).unwrap_or(f64::NAN);
    let mis: Vec<f64> = out.price[from..]
        .iter()
        .zip(&out.value[from..])
        .map(|(p, v)| mispricing(*p, *v))
        .collect::<Result<_, _>>()?;
    let mispricing = mis.iter().sum::<f64>() / mis.len().max(1) as f64;
    Ok(RunStats {
        pi,
        sd,
        sharpe,
        acf1,
        volatility,
        mispricing,
    })
}

/// Daily regressors and metrics for the malfunction regressions: relative wealth,
/// rolling volatility over `window` steps and mispricing, from the end of the
/// warm-up (or the first full window) onwards.
pub fn malfunction_data(
    out: &RunOutput,
    window: usize,
) -> Result<(Vec<[f64; 3]>, Vec<f64>, Vec<f64>)> {
    let mut prices = Vec::with_capacity(out.len() + 1);
    prices.push(out.initial_price);
    prices.extend_from_slice(&out.price);
    let vol = volatility(&prices, window)?;
    let start = out.warmup.max(window - 1);
    let mut x = Vec::new();
    let mut v = Vec::new();
    let mut m = Vec::new();
    for i in start..out.len() {
        let w = out.wealth_vector(i);
        if w.iter().any(|c| !c.is_finite()) {
            break;
        }
        x.push(w);
        // prices[i + 1] is the price at step index i
        v.push(vol[i + 1 - window]);
        m.push(mispricing(out.price[i], out.value[i])?);
    }
    Ok((x, v, m))
}

pub(crate) fn years(steps: usize) -> f64 {
    steps as f64 / STEPS_PER_YEAR as f64
}
