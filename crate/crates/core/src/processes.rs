//! Exogenous stochastic drivers: the autocorrelated geometric dividend process
//! and the mean-reverting noise-trader factor.

use crate::params::MarketParams;

/// Dividend level and the lag-two autoregressive driver behind its log growth.
///
/// `D(t) = D(t-1) * exp(g - sigma^2/2 + sigma * U(t))` with
/// `U(t) = omega * U(t-2) + sqrt(1 - omega^2) * Z(t)`, so `U` has unit variance
/// and the log growth has per-step volatility `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct DividendState {
    pub d_curr: f64,
    pub u_lag1: f64,
    pub u_lag2: f64,
    pub g_step: f64,
    pub sigma_step: f64,
    pub omega: f64,
}

impl DividendState {
    pub fn new(d0: f64, g_step: f64, sigma_step: f64, omega: f64) -> Self {
        debug_assert!(d0 > 0.0 && omega.abs() < 1.0);
        Self {
            d_curr: d0,
            u_lag1: 0.0,
            u_lag2: 0.0,
            g_step,
            sigma_step,
            omega,
        }
    }

    pub fn from_params(d0: f64, params: &MarketParams) -> Self {
        Self::new(d0, params.g_step(), params.sigma_step(), params.omega)
    }

    /// Advances the driver with the standard normal draw `z` and returns the new `U`.
    pub fn step_u(&mut self, z: f64) -> f64 {
        let innovation = libm::sqrt(1.0 - self.omega * self.omega);
        let u = self.omega * self.u_lag2 + innovation * z;
        self.u_lag2 = self.u_lag1;
        self.u_lag1 = u;
        u
    }

    /// Advances the dividend by one step and returns the new level.
    pub fn step_dividend(&mut self, z: f64) -> f64 {
        let u = self.step_u(z);
        let s = self.sigma_step;
        self.d_curr *= libm::exp(self.g_step - 0.5 * s * s + s * u);
        self.d_curr
    }
}

/// Discretised Ornstein-Uhlenbeck factor scaling the noise traders' perceived value.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFactorState {
    pub x_curr: f64,
    pub rho: f64,
    pub mu: f64,
    pub gamma_step: f64,
    pub x_floor: f64,
}

impl NoiseFactorState {
    pub fn new(x0: f64, rho: f64, gamma_step: f64, x_floor: f64) -> Self {
        debug_assert!(rho > 0.0 && rho < 1.0 && x_floor > 0.0);
        Self {
            x_curr: x0.max(x_floor),
            rho,
            mu: 1.0,
            gamma_step,
            x_floor,
        }
    }

    pub fn from_params(params: &MarketParams) -> Self {
        Self::new(1.0, params.rho, params.gamma_step(), params.x_floor)
    }

    pub fn step_noise_factor(&mut self, eps: f64) -> f64 {
        let x = self.x_curr + self.rho * (self.mu - self.x_curr) + self.gamma_step * eps;
        self.x_curr = x.max(self.x_floor);
        self.x_curr
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::reversion_for_half_life;
    use crate::rng::{NormalStream, DIVIDEND_STREAM};
    use alloc::vec::Vec;
    use approx::assert_relative_eq;

    fn sample_acf(xs: &[f64], lag: usize) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let cov = xs
            .windows(lag + 1)
            .map(|w| (w[0] - mean) * (w[lag] - mean))
            .sum::<f64>()
            / n;
        cov / var
    }

    fn simulate_u(omega: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut st = DividendState::new(1.0, 0.0, 0.0, omega);
        let mut z = NormalStream::new(seed, DIVIDEND_STREAM, 0);
        (0..n).map(|_| st.step_u(z.draw())).collect()
    }

    #[test]
    fn u_passes_shock_through_without_autocorrelation() {
        let mut st = DividendState::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(st.step_u(0.7), 0.7);
    }

    #[test]
    fn u_deterministic_part() {
        let mut st = DividendState::new(1.0, 0.0, 0.0, 0.1);
        st.u_lag2 = 1.0;
        assert_relative_eq!(st.step_u(0.0), 0.1, epsilon = 1e-15);
        // the old lag-1 value moved into lag 2
        assert_eq!(st.u_lag2, 0.0);
        assert_relative_eq!(st.u_lag1, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn u_has_unit_variance_and_lag_two_memory() {
        let xs = simulate_u(0.1, 1_000_000, 11);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        assert!((var - 1.0).abs() < 0.01, "var {var}");
        assert!(sample_acf(&xs, 1).abs() < 0.01);
        assert!((sample_acf(&xs, 2) - 0.1).abs() < 0.01);
        // lag 4 = omega^2, odd lags vanish
        assert!((sample_acf(&xs, 4) - 0.01).abs() < 0.01);
        assert!(sample_acf(&xs, 3).abs() < 0.01);
    }

    #[test]
    fn degenerate_dividend_is_constant() {
        let mut st = DividendState::new(3.5, 0.0, 0.0, 0.1);
        for z in [0.3, -2.0, 1.1] {
            assert_eq!(st.step_dividend(z), 3.5);
        }
    }

    #[test]
    fn dividend_closed_form_single_step() {
        let s = 0.06 / libm::sqrt(252.0);
        let mut st = DividendState::new(1.0, 0.0, s, 0.0);
        // omega = 0 so u' = z
        let d = st.step_dividend(1.0);
        assert_relative_eq!(d, libm::exp(-s * s / 2.0 + s), epsilon = 1e-15);
    }

    #[test]
    fn dividend_log_growth_matches_annual_rate() {
        let p = MarketParams::default();
        let mut st = DividendState::from_params(1.0, &p);
        let mut z = NormalStream::new(3, DIVIDEND_STREAM, 0);
        let n = 1_000_000;
        let mut prev = st.d_curr;
        let mut sum = 0.0;
        for _ in 0..n {
            let d = st.step_dividend(z.draw());
            assert!(d > 0.0);
            sum += libm::log(d / prev);
            prev = d;
        }
        // expected gross growth per year exp(252 * (mean log growth) + sigma^2/2) - 1
        let per_year = sum / n as f64 * 252.0 + 0.5 * p.sigma * p.sigma;
        assert!((libm::expm1(per_year) - p.g).abs() < 0.005, "{per_year}");
    }

    #[test]
    fn noise_factor_at_mean_is_fixed() {
        let mut x = NoiseFactorState::new(1.0, 0.3, 0.01, 1e-4);
        assert_eq!(x.step_noise_factor(0.0), 1.0);
    }

    #[test]
    fn noise_factor_half_way_reversion() {
        let mut x = NoiseFactorState::new(2.0, 0.5, 0.01, 1e-4);
        assert_eq!(x.step_noise_factor(0.0), 1.5);
    }

    #[test]
    fn noise_factor_half_life_six_years() {
        let rho = reversion_for_half_life(6.0);
        let mut x = NoiseFactorState::new(2.0, rho, 0.0, 1e-4);
        for _ in 0..6 * 252 {
            x.step_noise_factor(0.0);
        }
        assert!((x.x_curr - 1.0 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn noise_factor_respects_floor() {
        let mut x = NoiseFactorState::new(0.01, 0.1, 1.0, 1e-4);
        assert_eq!(x.step_noise_factor(-50.0), 1e-4);
    }
}
