//! Return, risk and price-quality statistics over run series.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::params::STEPS_PER_YEAR;

const YEAR: f64 = STEPS_PER_YEAR as f64;

/// Annualised geometric mean of per-step returns: `(prod(1 + r))^(252/T) - 1`.
pub fn avg_return(returns: &[f64]) -> Result<f64> {
    if returns.is_empty() {
        return Err(Error::InsufficientHistory { need: 1, got: 0 });
    }
    let mut log_sum = 0.0;
    for r in returns {
        if !(1.0 + r > 0.0) {
            return Err(Error::Domain("gross return must be positive"));
        }
        log_sum += libm::log1p(*r);
    }
    Ok(libm::expm1(log_sum * YEAR / returns.len() as f64))
}

fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

/// Per-step log returns of a positive price series.
pub fn log_returns(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::Domain("prices must be positive"));
    }
    Ok(prices.windows(2).map(|w| libm::log(w[1] / w[0])).collect())
}

/// Rolling annualised volatility of log returns. Entry `i` covers the `window`
/// returns ending at price `i + window`.
pub fn volatility(prices: &[f64], window: usize) -> Result<Vec<f64>> {
    if window < 2 || prices.len() < window + 1 {
        return Err(Error::InsufficientHistory {
            need: window + 1,
            got: prices.len(),
        });
    }
    let lr = log_returns(prices)?;
    let w = window as f64;
    let (mut s, mut s2) = (0.0, 0.0);
    for x in &lr[..window] {
        s += x;
        s2 += x * x;
    }
    let mut out = Vec::with_capacity(lr.len() - window + 1);
    let sd = |s: f64, s2: f64| libm::sqrt(((s2 - s * s / w) / (w - 1.0)).max(0.0) * YEAR);
    out.push(sd(s, s2));
    for i in window..lr.len() {
        let (add, drop) = (lr[i], lr[i - window]);
        s += add - drop;
        s2 += add * add - drop * drop;
        out.push(sd(s, s2));
    }
    Ok(out)
}

/// Annualised volatility of the whole series of log returns.
pub fn volatility_total(prices: &[f64]) -> Result<f64> {
    if prices.len() < 3 {
        return Err(Error::InsufficientHistory {
            need: 3,
            got: prices.len(),
        });
    }
    let lr = log_returns(prices)?;
    Ok(mean_and_std(&lr).1 * libm::sqrt(YEAR))
}

/// Absolute log2 deviation of price from value.
pub fn mispricing(p: f64, v: f64) -> Result<f64> {
    if !(p > 0.0 && v > 0.0) {
        return Err(Error::Domain("price and value must be positive"));
    }
    Ok(libm::fabs(libm::log2(p / v)))
}

/// Sample autocorrelation of `xs` at `lag`.
pub fn return_autocorrelation(xs: &[f64], lag: usize) -> Result<f64> {
    if xs.len() <= lag + 1 {
        return Err(Error::InsufficientHistory {
            need: lag + 2,
            got: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    if !(var > 0.0) {
        return Err(Error::DegenerateVariance(
            "autocorrelation of a constant series",
        ));
    }
    let cov: f64 = xs
        .windows(lag + 1)
        .map(|w| (w[0] - mean) * (w[lag] - mean))
        .sum();
    Ok(cov / var)
}

/// Annualised Sharpe ratio of per-step returns, without subtracting a risk-free
/// rate.
pub fn sharpe(returns: &[f64]) -> Result<f64> {
    if returns.len() < 2 {
        return Err(Error::InsufficientHistory {
            need: 2,
            got: returns.len(),
        });
    }
    let (mean, sd) = mean_and_std(returns);
    // rounding leaves a residual spread on constant input
    if !(sd > 1e-12 * mean.abs()) {
        return Err(Error::DegenerateVariance(
            "sharpe ratio of constant returns",
        ));
    }
    Ok(mean * YEAR / (sd * libm::sqrt(YEAR)))
}

/// Years needed to detect a Sharpe-ratio gap `ds` at `s` standard deviations.
pub fn detection_time(s: f64, ds: f64) -> Result<f64> {
    if ds == 0.0 {
        return Err(Error::DivisionByZero("sharpe gap must be non-zero"));
    }
    let x = s / ds;
    Ok(x * x)
}
