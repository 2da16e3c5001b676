use ecomarket_core::clearing::ClearingMode;
use ecomarket_core::engine::{run, RunOutcome};

use super::{run_stats, years, Outcome, STRATEGIES};
use crate::config::Config;
use crate::error::Result;
use crate::output::{num, Table};

/// One run at the configured wealth vector: the daily series and a summary.
pub fn simulate(cfg: &Config) -> Result<Outcome> {
    let rc = cfg.run_config()?;
    let out = run(&rc)?;

    let mut header: Vec<String> = [
        "t", "year", "price", "value", "value_vi", "dividend", "noise",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for prefix in ["w", "wealth", "leverage", "ret"] {
        header.extend(STRATEGIES.iter().map(|s| format!("{prefix}_{s}")));
    }
    header.extend(
        ["clearing_mode", "clearing_iterations", "clearing_residual"]
            .iter()
            .map(|s| s.to_string()),
    );
    let mut series = Table {
        name: "series".into(),
        header,
        rows: Vec::with_capacity(out.len()),
    };
    for i in 0..out.len() {
        let t = i + 1;
        let mut row = vec![
            t.to_string(),
            num(years(t)),
            num(out.price[i]),
            num(out.value[i]),
            num(out.value_vi[i]),
            num(out.dividend[i]),
            num(out.noise[i]),
        ];
        row.extend(out.wealth_vector(i).map(num));
        for f in 0..3 {
            row.push(num(out.funds[f].wealth[i]));
        }
        for f in 0..3 {
            row.push(num(out.funds[f].leverage[i]));
        }
        for f in 0..3 {
            row.push(num(out.funds[f].ret[i]));
        }
        let c = &out.clearing[i];
        row.push(match c.mode {
            ClearingMode::Root => "root".into(),
            ClearingMode::Minimized => "minimized".into(),
        });
        row.push(c.iterations.to_string());
        row.push(num(c.residual));
        series.push(row);
    }

    let mut summary = Table::new("summary", &["key", "value"]);
    let outcome = match &out.outcome {
        RunOutcome::Completed => "completed".to_string(),
        RunOutcome::Insolvent { t, funds } => format!("insolvent at step {t}: funds {funds:?}"),
        RunOutcome::Failed(e) => format!("failed: {e}"),
    };
    summary.push(vec!["outcome".into(), outcome]);
    summary.push(vec!["steps".into(), out.len().to_string()]);
    summary.push(vec!["supply".into(), num(out.supply)]);
    if out.len() > out.warmup + 2 {
        let stats = run_stats(&out)?;
        for (i, s) in STRATEGIES.iter().enumerate() {
            summary.push(vec![format!("pi_{s}"), num(stats.pi[i])]);
        }
        summary.push(vec!["volatility".into(), num(stats.volatility)]);
        summary.push(vec!["mispricing".into(), num(stats.mispricing)]);
        summary.push(vec!["acf1".into(), num(stats.acf1)]);
    }
    summary.push(vec![
        "leverage_violations".into(),
        out.leverage_violations.to_string(),
    ]);
    summary.push(vec!["max_trade_error".into(), num(out.accounting.trade)]);
    summary.push(vec![
        "max_leverage_error".into(),
        num(out.accounting.leverage),
    ]);
    let minimized = out
        .clearing
        .iter()
        .filter(|c| c.mode == ClearingMode::Minimized)
        .count();
    summary.push(vec!["minimized_steps".into(), minimized.to_string()]);

    Ok(Outcome {
        tables: vec![series, summary],
        seeds: vec![cfg.seed],
    })
}
