use ecomarket_core::engine::{run, RunConfig, RunMode};
use ecomarket_core::experiments::{kl_curve, sample_trajectory, uniform_simplex_point, Trajectory};
use ecomarket_core::WealthVector;

use super::Outcome;
use crate::config::{Config, ConvergeParam, Init};
use crate::error::Result;
use crate::output::{num, Table};
use crate::pool::par_map;

/// Initial wealth of run `i`.
pub fn initial_wealth(cfg: &Config, i: u64) -> Result<WealthVector> {
    match cfg.init {
        Init::Uniform => Ok(uniform_simplex_point(cfg.seed, i)),
        Init::Fixed => cfg.wealth(),
    }
}

/// Reinvestment runs from each run's initial wealth, sampled every
/// `sample_every` steps.
pub fn ensemble(cfg: &Config) -> Result<Vec<Trajectory>> {
    let mut base: RunConfig = cfg.run_config()?;
    base.mode = RunMode::Reinvest { f: cfg.f };
    let runs: Vec<u64> = (0..cfg.runs as u64).collect();
    par_map(&runs, |i| {
        let w = initial_wealth(cfg, *i)?;
        let mut rc = base.clone().with_wealth(w, cfg.total_wealth);
        rc.run_index = *i;
        let out = run(&rc)?;
        Ok(sample_trajectory(&out, &w, rc.horizon, cfg.sample_every))
    })
    .into_iter()
    .collect()
}

/// Wealth paths and terminal wealth of freely evolving ecologies.
pub fn trajectories(cfg: &Config) -> Result<Outcome> {
    let trs = ensemble(cfg)?;
    let mut paths = Table::new("paths", &["run", "step", "year", "w_nt", "w_vi", "w_tf"]);
    let mut terminal = Table::new(
        "terminal",
        &[
            "run",
            "w0_nt",
            "w0_vi",
            "w0_tf",
            "w_nt",
            "w_vi",
            "w_tf",
            "insolvent_at",
            "failed",
        ],
    );
    for (run, tr) in trs.iter().enumerate() {
        for (k, w) in tr.samples.iter().enumerate() {
            let mut row = vec![run.to_string(), (k * tr.every).to_string(), num(tr.year(k))];
            row.extend(w.map(num));
            paths.push(row);
        }
        let mut row = vec![run.to_string()];
        row.extend(tr.samples[0].map(num));
        row.extend(tr.terminal().map(num));
        row.push(tr.insolvent_at.map(|t| t.to_string()).unwrap_or_default());
        row.push(tr.failed.to_string());
        terminal.push(row);
    }
    Ok(Outcome {
        tables: vec![paths, terminal],
        seeds: vec![cfg.seed],
    })
}

/// Config for one convergence variant.
pub fn variant(cfg: &Config, value: f64) -> Config {
    let mut c = cfg.clone();
    match cfg.converge_param {
        ConvergeParam::F => c.f = value,
        ConvergeParam::Gamma => c.gamma = value,
        ConvergeParam::Sigma => c.sigma = value,
    }
    c.init = Init::Uniform;
    c
}

pub fn param_name(p: ConvergeParam) -> &'static str {
    match p {
        ConvergeParam::F => "f",
        ConvergeParam::Gamma => "gamma",
        ConvergeParam::Sigma => "sigma",
    }
}

/// Result of one convergence variant.
#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    pub value: f64,
    pub years: Vec<f64>,
    pub kl: Vec<f64>,
    pub insolvent: usize,
    pub failed: usize,
    pub runs: usize,
}

impl Convergence {
    /// Relative decrease of the divergence from the first to the last sample.
    pub fn drop(&self) -> f64 {
        1.0 - self.kl[self.kl.len() - 1] / self.kl[0]
    }
}

/// Divergence of the ensemble from its own late-time distribution, which pools
/// the samples in the second half of the horizon.
pub fn convergence(cfg: &Config, value: f64) -> Result<Convergence> {
    let c = variant(cfg, value);
    c.validate()?;
    let trs = ensemble(&c)?;
    let n = trs[0].samples.len();
    let kl = kl_curve(&trs, n / 2..n)?;
    Ok(Convergence {
        value,
        years: (0..n).map(|k| trs[0].year(k)).collect(),
        kl,
        insolvent: trs.iter().filter(|t| t.insolvent_at.is_some()).count(),
        failed: trs.iter().filter(|t| t.failed).count(),
        runs: trs.len(),
    })
}

pub fn converge(cfg: &Config) -> Result<Outcome> {
    let name = param_name(cfg.converge_param);
    let mut kl = Table::new("kl", &["param", "value", "year", "kl"]);
    let mut summary = Table::new(
        "summary",
        &[
            "param",
            "value",
            "kl_start",
            "kl_end",
            "drop",
            "insolvent_fraction",
            "failed",
            "runs",
        ],
    );
    for v in &cfg.converge_values {
        let c = convergence(cfg, *v)?;
        for (y, d) in c.years.iter().zip(&c.kl) {
            kl.push(vec![name.into(), num(*v), num(*y), num(*d)]);
        }
        summary.push(vec![
            name.into(),
            num(*v),
            num(c.kl[0]),
            num(c.kl[c.kl.len() - 1]),
            num(c.drop()),
            num(c.insolvent as f64 / c.runs as f64),
            c.failed.to_string(),
            c.runs.to_string(),
        ]);
    }
    Ok(Outcome {
        tables: vec![kl, summary],
        seeds: vec![cfg.seed],
    })
}
