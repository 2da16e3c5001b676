use ecomarket_core::ecology::stats::{log_returns, mispricing, return_autocorrelation};
use ecomarket_core::engine::run;
use ecomarket_core::params::STEPS_PER_YEAR;

use super::Outcome;
use crate::config::Config;
use crate::error::Result;
use crate::output::{num, Table};

/// Sample skewness and excess kurtosis.
pub fn shape(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// Return distribution, volatility clustering and mispricing of one run.
pub fn stylized_facts(cfg: &Config) -> Result<Outcome> {
    let out = run(&cfg.run_config()?)?;
    let from = out.warmup.min(out.len().saturating_sub(3));
    let lr = log_returns(&out.price[from..])?;
    let abs: Vec<f64> = lr.iter().map(|x| x.abs()).collect();
    let mis: Vec<f64> = out.price[from..]
        .iter()
        .zip(&out.value[from..])
        .map(|(p, v)| mispricing(*p, *v))
        .collect::<Result<_, _>>()?;

    let n = lr.len() as f64;
    let mean = lr.iter().sum::<f64>() / n;
    let sd = (lr.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let (skew, kurt) = shape(&lr);
    let year = STEPS_PER_YEAR as f64;

    let mut moments = Table::new("moments", &["key", "value"]);
    moments.push(vec!["observations".into(), lr.len().to_string()]);
    moments.push(vec!["mean_log_return_annual".into(), num(mean * year)]);
    moments.push(vec!["volatility_annual".into(), num(sd * year.sqrt())]);
    moments.push(vec!["skewness".into(), num(skew)]);
    moments.push(vec!["excess_kurtosis".into(), num(kurt)]);
    moments.push(vec![
        "mean_mispricing".into(),
        num(mis.iter().sum::<f64>() / mis.len() as f64),
    ]);
    moments.push(vec![
        "max_mispricing".into(),
        num(mis.iter().copied().fold(0.0, f64::max)),
    ]);
    let within = mis.iter().filter(|m| **m < 1.0).count() as f64 / mis.len() as f64;
    moments.push(vec!["within_factor_two".into(), num(within)]);

    let mut acf = Table::new("acf", &["lag", "returns", "abs_returns"]);
    for lag in 1..=cfg.acf_lags {
        acf.push(vec![
            lag.to_string(),
            num(return_autocorrelation(&lr, lag).unwrap_or(f64::NAN)),
            num(return_autocorrelation(&abs, lag).unwrap_or(f64::NAN)),
        ]);
    }
    Ok(Outcome {
        tables: vec![moments, acf],
        seeds: vec![cfg.seed],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_of_symmetric_two_point_distribution() {
        let xs: Vec<f64> = (0..1000)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let (s, k) = shape(&xs);
        assert!(s.abs() < 1e-12);
        assert!((k + 2.0).abs() < 1e-12);
    }
}
