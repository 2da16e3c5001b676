use ecomarket_core::ecology::community::{
    community_matrix, food_web_matrix, trophic_levels, CommunityMatrix, FoodWeb, SimulatedReturns,
    TrophicResult,
};
use ecomarket_core::ecology::regression::{regress_malfunction, MalfunctionCoeffs, OlsFit};
use ecomarket_core::engine::{run, RunMode};
use ecomarket_core::WealthVector;

use super::sweep::{constant_wealth_base, trophic_ordering};
use super::{malfunction_data, Outcome, STRATEGIES};
use crate::config::Config;
use crate::error::Result;
use crate::output::{num, Table};
use crate::pool::ParallelReturns;

pub fn oracle(cfg: &Config) -> Result<ParallelReturns> {
    Ok(ParallelReturns(SimulatedReturns::new(
        constant_wealth_base(cfg)?,
    )))
}

/// Community matrix at `w` with the configured step and seeds.
pub fn community_at(cfg: &Config, w: &WealthVector) -> Result<CommunityMatrix> {
    Ok(community_matrix(&oracle(cfg)?, w, cfg.h, &cfg.seed_list())?)
}

pub fn community(cfg: &Config) -> Result<Outcome> {
    let w = cfg.wealth()?;
    let m = community_at(cfg, &w)?;
    let mut t = Table::new(
        "community",
        &[
            "w_nt", "w_vi", "w_tf", "i", "j", "g", "std_err", "t_stat", "h", "seeds", "years",
        ],
    );
    for i in 0..3 {
        for j in 0..3 {
            let mut row: Vec<String> = w.as_array().map(num).to_vec();
            row.extend([
                STRATEGIES[i].to_string(),
                STRATEGIES[j].to_string(),
                num(m.g[i][j]),
                num(m.std_err[i][j]),
                num(m.t_stat(i, j)),
                num(m.h),
                m.seeds.to_string(),
                cfg.years.to_string(),
            ]);
            t.push(row);
        }
    }
    Ok(Outcome {
        tables: vec![t],
        seeds: cfg.seed_list(),
    })
}

/// Food web and trophic levels at `w`.
pub fn food_web_at(cfg: &Config, w: &WealthVector) -> Result<(FoodWeb, TrophicResult)> {
    let web = food_web_matrix(
        &oracle(cfg)?,
        w,
        &cfg.seed_list(),
        cfg.food_web_norm(),
        cfg.min_t,
    )?;
    let levels = trophic_levels(&web.a);
    Ok((web, levels))
}

pub fn trophic(cfg: &Config) -> Result<Outcome> {
    let w = cfg.wealth()?;
    let (web, levels) = food_web_at(cfg, &w)?;
    let mut a = Table::new("food_web", &["i", "j", "a", "raw", "std_err"]);
    for i in 0..3 {
        for j in 0..3 {
            a.push(vec![
                STRATEGIES[i].into(),
                STRATEGIES[j].into(),
                num(web.a[i][j]),
                num(web.raw[i][j]),
                num(web.std_err[i][j]),
            ]);
        }
    }
    let mut l = Table::new("levels", &["strategy", "base_return", "level", "ordering"]);
    let ordering = trophic_ordering(&levels);
    for i in 0..3 {
        let level = match levels {
            TrophicResult::Levels(t) => num(t[i]),
            TrophicResult::Undefined => "undefined".into(),
        };
        l.push(vec![
            STRATEGIES[i].into(),
            num(web.base_returns[i]),
            level,
            ordering.clone(),
        ]);
    }
    Ok(Outcome {
        tables: vec![a, l],
        seeds: cfg.seed_list(),
    })
}

/// Malfunction regressions on one reinvesting run of the configured market.
/// Shares must move for the design to have full rank.
pub fn regression(cfg: &Config) -> Result<(MalfunctionCoeffs, usize)> {
    let mut rc = cfg.run_config()?;
    rc.mode = RunMode::Reinvest { f: cfg.f };
    let out = run(&rc)?;
    let (x, vol, mis) = malfunction_data(&out, cfg.vol_window)?;
    Ok((regress_malfunction(&x, &vol, &mis)?, out.len()))
}

fn fit_row(metric: &str, variant: &str, fit: &OlsFit) -> Vec<String> {
    let mut row = vec![metric.to_string(), variant.to_string()];
    row.extend(fit.coef.iter().map(|c| num(*c)));
    row.extend(fit.t_stat.iter().map(|c| num(*c)));
    row.push(num(fit.r_squared));
    row.push(fit.observations.to_string());
    row
}

pub fn regress(cfg: &Config) -> Result<Outcome> {
    let (c, steps) = regression(cfg)?;
    let mut t = Table::new(
        "regression",
        &[
            "metric",
            "variant",
            "b0",
            "b1",
            "b2",
            "t0",
            "t1",
            "t2",
            "r_squared",
            "observations",
        ],
    );
    // b0..b2 are (NT, VI, TF) without intercept and (intercept, VI, TF) with one
    t.push(fit_row("volatility", "shares", &c.volatility));
    t.push(fit_row("mispricing", "shares", &c.mispricing));
    if let Some(f) = &c.volatility_with_intercept {
        t.push(fit_row("volatility", "intercept", f));
    }
    if let Some(f) = &c.mispricing_with_intercept {
        t.push(fit_row("mispricing", "intercept", f));
    }
    let mut s = Table::new("run", &["key", "value"]);
    s.push(vec!["steps".into(), steps.to_string()]);
    s.push(vec!["vol_window".into(), cfg.vol_window.to_string()]);
    Ok(Outcome {
        tables: vec![t, s],
        seeds: vec![cfg.seed],
    })
}
