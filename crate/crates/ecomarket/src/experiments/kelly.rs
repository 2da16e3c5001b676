use ecomarket_core::engine::run;
use ecomarket_core::experiments::{death_times, kelly_log_return, survival_curve};
use ecomarket_core::params::STEPS_PER_YEAR;

use super::Outcome;
use crate::config::Config;
use crate::error::{HarnessError, Result};
use crate::output::{num, Table};
use crate::pool::par_map;

pub const FUNDS: [&str; 4] = ["nt", "vi", "tf", "kelly"];

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierResult {
    pub multiplier: f64,
    pub mean_log_return: f64,
    pub std_err: f64,
    pub runs: usize,
}

struct RunSummary {
    log_return: Option<f64>,
    deaths: Vec<Option<usize>>,
}

fn kelly_runs(cfg: &Config, multiplier: f64) -> Result<Vec<RunSummary>> {
    let mut base = cfg.run_config()?;
    base.kelly = Some(cfg.kelly(multiplier));
    base.halt_on_insolvency = false;
    let runs: Vec<u64> = (0..cfg.runs as u64).collect();
    par_map(&runs, |i| {
        let mut rc = base.clone();
        rc.run_index = *i;
        let out = run(&rc)?;
        Ok(RunSummary {
            log_return: kelly_log_return(&out),
            deaths: death_times(&out),
        })
    })
    .into_iter()
    .collect()
}

fn summarise(multiplier: f64, runs: &[RunSummary]) -> MultiplierResult {
    let v: Vec<f64> = runs.iter().filter_map(|r| r.log_return).collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    MultiplierResult {
        multiplier,
        mean_log_return: mean,
        std_err: (var / n).sqrt(),
        runs: v.len(),
    }
}

/// Mean annual log return of the Kelly fund for each multiplier of its fraction.
pub fn multiplier_curve(cfg: &Config) -> Result<Vec<MultiplierResult>> {
    cfg.multipliers
        .iter()
        .map(|m| Ok(summarise(*m, &kelly_runs(cfg, *m)?)))
        .collect()
}

/// Grid multiplier with the highest mean log return.
pub fn best_multiplier(curve: &[MultiplierResult]) -> Option<f64> {
    curve
        .iter()
        .max_by(|a, b| a.mean_log_return.total_cmp(&b.mean_log_return))
        .map(|r| r.multiplier)
}

pub fn kelly(cfg: &Config) -> Result<Outcome> {
    if !cfg.multipliers.contains(&1.0) {
        return Err(HarnessError::Config(
            "the multiplier grid must include 1.0".into(),
        ));
    }
    let mut returns = Table::new(
        "returns",
        &["multiplier", "mean_log_return", "std_err", "runs"],
    );
    let mut survival = Table::new("survival", &["strategy", "year", "fraction"]);
    for m in &cfg.multipliers {
        let runs = kelly_runs(cfg, *m)?;
        let r = summarise(*m, &runs);
        returns.push(vec![
            num(r.multiplier),
            num(r.mean_log_return),
            num(r.std_err),
            r.runs.to_string(),
        ]);
        if *m == 1.0 {
            let times: Vec<usize> = (0..=cfg.years).map(|y| y * STEPS_PER_YEAR).collect();
            let endowment = cfg.run_config()?.endowment;
            for (f, name) in FUNDS.iter().enumerate() {
                let present = f == 3 || endowment[f] > 0.0;
                let deaths: Vec<Option<usize>> = runs.iter().map(|r| r.deaths[f]).collect();
                let curve = survival_curve(&deaths, &vec![present; runs.len()], &times);
                for (t, s) in times.iter().zip(curve) {
                    survival.push(vec![
                        name.to_string(),
                        num((*t / STEPS_PER_YEAR) as f64),
                        num(s),
                    ]);
                }
            }
        }
    }
    Ok(Outcome {
        tables: vec![returns, survival],
        seeds: vec![cfg.seed],
    })
}
