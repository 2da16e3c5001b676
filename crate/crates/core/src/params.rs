//! Model parameters in annual units and their per-step conversions.

use crate::error::{Error, Result};
use alloc::string::ToString;

/// Trading days per year; one simulation step is one day.
pub const STEPS_PER_YEAR: usize = 252;

/// Converts an annually compounded rate into the equivalent per-step rate.
pub fn per_step_rate(annual: f64) -> f64 {
    libm::expm1(libm::log1p(annual) / STEPS_PER_YEAR as f64)
}

/// Converts an annual volatility into a per-step volatility.
pub fn per_step_vol(annual: f64) -> f64 {
    annual / libm::sqrt(STEPS_PER_YEAR as f64)
}

/// Mean-reversion rate per step that gives the noise factor a half-life of `years`.
pub fn reversion_for_half_life(years: f64) -> f64 {
    1.0 - libm::pow(0.5, 1.0 / (years * STEPS_PER_YEAR as f64))
}

/// Default model parameters. Field names follow the usual notation of the model
/// so that configuration files can use them verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketParams {
    /// Risk-free rate, annual.
    pub r: f64,
    /// Dividend growth rate, annual.
    pub g: f64,
    /// Required rate of return (cost of equity), annual.
    pub k: f64,
    /// Dividend growth volatility, annual.
    pub sigma: f64,
    /// Lag-two autocorrelation of the dividend driver.
    pub omega: f64,
    /// Noise-trader mean reversion rate, per step.
    pub rho: f64,
    /// Noise-trader volatility, annual.
    pub sigma_nt: f64,
    /// Leverage limits for (NT, VI, TF).
    pub lambda: [f64; 3],
    /// Signal scales for (NT, VI, TF).
    pub c: [f64; 3],
    /// Lower bound on the noise factor.
    pub x_floor: f64,
    /// Price (and fundamental value) at t = 0.
    pub initial_price: f64,
}

impl Default for MarketParams {
    fn default() -> Self {
        Self {
            r: 0.01,
            g: 0.01,
            k: 0.02,
            sigma: 0.06,
            omega: 0.1,
            rho: reversion_for_half_life(6.0),
            sigma_nt: 0.12,
            lambda: [1.0, 8.0, 1.0],
            c: [5.0, 10.0, 4.0],
            x_floor: 1e-4,
            initial_price: 100.0,
        }
    }
}

impl MarketParams {
    pub fn r_step(&self) -> f64 {
        per_step_rate(self.r)
    }

    pub fn k_step(&self) -> f64 {
        per_step_rate(self.k)
    }

    /// Log drift of the dividend exponent per step, `ln(1 + g) / 252`.
    pub fn g_step(&self) -> f64 {
        libm::log1p(self.g) / STEPS_PER_YEAR as f64
    }

    /// Expected simple dividend growth per step, `E[D(t+1)/D(t)] - 1`.
    pub fn g_expected_step(&self) -> f64 {
        libm::expm1(self.g_step())
    }

    pub fn sigma_step(&self) -> f64 {
        per_step_vol(self.sigma)
    }

    pub fn gamma_step(&self) -> f64 {
        per_step_vol(self.sigma_nt)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.omega.abs() < 1.0) {
            return bad("|omega| must be < 1");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho must lie in (0, 1)");
        }
        if !(self.sigma >= 0.0 && self.sigma_nt >= 0.0) {
            return bad("volatilities must be non-negative");
        }
        if !(self.k_step() > self.g_expected_step()) {
            return bad("k must exceed g for the valuation to converge");
        }
        if self.lambda.iter().any(|l| !(*l > 0.0)) || self.c.iter().any(|c| !(*c > 0.0)) {
            return bad("leverage limits and signal scales must be positive");
        }
        if !(self.x_floor > 0.0 && self.initial_price > 0.0) {
            return bad("x_floor and initial_price must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn per_step_rate_compounds_back_to_annual() {
        let step = per_step_rate(0.01);
        let annual = libm::pow(1.0 + step, STEPS_PER_YEAR as f64) - 1.0;
        assert_relative_eq!(annual, 0.01, epsilon = 1e-12);
    }

    #[test]
    fn expected_growth_matches_annual_rate() {
        let p = MarketParams::default();
        let annual = libm::pow(1.0 + p.g_expected_step(), 252.0) - 1.0;
        assert_relative_eq!(annual, p.g, epsilon = 1e-13);
    }

    #[test]
    fn defaults_validate() {
        MarketParams::default().validate().unwrap();
        let mut p = MarketParams::default();
        p.k = 0.005;
        assert!(p.validate().is_err());
    }
}
