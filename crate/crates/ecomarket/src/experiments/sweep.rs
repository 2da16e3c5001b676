use ecomarket_core::ecology::community::{
    food_web_matrix, trophic_levels, SimulatedReturns, TrophicResult,
};
use ecomarket_core::ecology::simplex::simplex_grid;
use ecomarket_core::engine::{run, RunConfig, RunMode, RunOutcome};
use ecomarket_core::WealthVector;

use super::{run_stats, Outcome, RunStats, STRATEGIES};
use crate::config::Config;
use crate::error::{HarnessError, Result};
use crate::output::{num, Table};
use crate::pool::{par_map, ParallelReturns};

/// Constant-wealth configuration used for density-dependence estimates.
pub fn constant_wealth_base(cfg: &Config) -> Result<RunConfig> {
    let mut rc = cfg.run_config()?;
    rc.mode = RunMode::ConstantWealth;
    Ok(rc)
}

fn point_stats(base: &RunConfig, w: &WealthVector, total: f64, seed: u64) -> Result<RunStats> {
    let mut rc = base.clone().with_wealth(*w, total);
    rc.seed = seed;
    let out = run(&rc)?;
    match out.outcome {
        RunOutcome::Completed => run_stats(&out),
        RunOutcome::Failed(e) => Err(e.into()),
        RunOutcome::Insolvent { t, funds } => {
            Err(ecomarket_core::Error::Insolvency { funds, t }.into())
        }
    }
}

/// Orders strategies by trophic level, e.g. `nt<vi<tf`.
pub fn trophic_ordering(result: &TrophicResult) -> String {
    match result {
        TrophicResult::Undefined => "undefined".into(),
        TrophicResult::Levels(t) => {
            let mut idx = [0usize, 1, 2];
            idx.sort_by(|a, b| t[*a].total_cmp(&t[*b]));
            idx.map(|i| STRATEGIES[i]).join("<")
        }
    }
}

fn mean_finite(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Returns, risk and market quality over a grid on the wealth simplex.
pub fn sweep(cfg: &Config) -> Result<Outcome> {
    let grid = simplex_grid(cfg.resolution, cfg.margin)?;
    let seeds = cfg.seed_list();
    let base = constant_wealth_base(cfg)?;
    let jobs: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|g| seeds.iter().map(move |s| (g, *s)))
        .collect();
    let results = par_map(&jobs, |(g, s)| {
        point_stats(&base, &grid[*g], cfg.total_wealth, *s)
    });

    let mut header: Vec<String> = ["w_nt", "w_vi", "w_tf"].map(String::from).to_vec();
    for prefix in ["pi", "sd", "sharpe"] {
        header.extend(STRATEGIES.map(|s| format!("{prefix}_{s}")));
    }
    header.extend(
        [
            "acf1",
            "volatility",
            "mispricing",
            "dominant",
            "trophic",
            "ok_seeds",
            "failed_seeds",
            "error",
        ]
        .map(String::from),
    );
    let mut table = Table {
        name: "sweep".into(),
        header,
        rows: Vec::new(),
    };

    let oracle = ParallelReturns(SimulatedReturns::new(base.clone()));
    for (g, w) in grid.iter().enumerate() {
        let per: Vec<&Result<RunStats>> = results[g * seeds.len()..(g + 1) * seeds.len()]
            .iter()
            .collect();
        let ok: Vec<&RunStats> = per.iter().filter_map(|r| r.as_ref().ok()).collect();
        let first_error = per
            .iter()
            .find_map(|r| r.as_ref().err())
            .map(HarnessError::to_string)
            .unwrap_or_default();
        let mut row: Vec<String> = w.as_array().map(num).to_vec();
        let pi: [f64; 3] = std::array::from_fn(|i| mean_finite(ok.iter().map(|s| s.pi[i])));
        let sd: [f64; 3] = std::array::from_fn(|i| mean_finite(ok.iter().map(|s| s.sd[i])));
        let sharpe: [f64; 3] = std::array::from_fn(|i| mean_finite(ok.iter().map(|s| s.sharpe[i])));
        row.extend(pi.map(num));
        row.extend(sd.map(num));
        row.extend(sharpe.map(num));
        row.push(num(mean_finite(ok.iter().map(|s| s.acf1))));
        row.push(num(mean_finite(ok.iter().map(|s| s.volatility))));
        row.push(num(mean_finite(ok.iter().map(|s| s.mispricing))));
        let dominant = (0..3)
            .filter(|i| pi[*i].is_finite())
            .max_by(|a, b| pi[*a].total_cmp(&pi[*b]))
            .map(|i| STRATEGIES[i].to_string())
            .unwrap_or_default();
        row.push(dominant);
        let trophic = if cfg.sweep_trophic {
            match food_web_matrix(&oracle, w, &seeds, cfg.food_web_norm(), cfg.min_t) {
                Ok(web) => trophic_ordering(&trophic_levels(&web.a)),
                Err(e) => format!("error: {e}"),
            }
        } else {
            String::new()
        };
        row.push(trophic);
        row.push(ok.len().to_string());
        row.push((per.len() - ok.len()).to_string());
        row.push(first_error);
        table.push(row);
    }
    Ok(Outcome {
        tables: vec![table],
        seeds,
    })
}
