//! Fundamental value of the stock and the value investors' estimate of it.

use crate::error::{Error, Result};

/// Gordon growth value `d_next / (k - g)` of a perpetually growing dividend stream.
pub fn gordon_value(d_next: f64, g_hat: f64, k_step: f64) -> Result<f64> {
    if !(k_step > g_hat) {
        return Err(Error::NonConvergent {
            k: k_step,
            g: g_hat,
        });
    }
    Ok(d_next / (k_step - g_hat))
}

/// Value of the dividend stream with current dividend `d_curr` growing at `g`.
pub fn value_from_current(d_curr: f64, g: f64, k_step: f64) -> Result<f64> {
    gordon_value(d_curr * (1.0 + g), g, k_step)
}

/// Running estimate of the expected per-step dividend growth.
///
/// The estimator fits `E[D(t)] = D(0)(1+g)^t` under a lognormal growth model:
/// `g = exp(m + s^2/2) - 1` with `m`, `s^2` the mean and sample variance of the
/// observed log growth rates. Autocorrelation of the growth rates is ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GrowthEstimator {
    count: usize,
    mean: f64,
    m2: f64,
    last: Option<f64>,
}

impl GrowthEstimator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, dividend: f64) {
        debug_assert!(dividend > 0.0);
        if let Some(prev) = self.last {
            let x = libm::log(dividend / prev);
            self.count += 1;
            let delta = x - self.mean;
            self.mean += delta / self.count as f64;
            self.m2 += delta * (x - self.mean);
        }
        self.last = Some(dividend);
    }

    /// Estimator state after observing `count` log growth rates with the given
    /// mean and sample variance, the last dividend being `last`.
    pub fn from_moments(count: usize, mean: f64, variance: f64, last: f64) -> Self {
        debug_assert!(last > 0.0 && variance >= 0.0);
        let m2 = if count > 1 {
            variance * (count - 1) as f64
        } else {
            0.0
        };
        Self {
            count,
            mean,
            m2,
            last: Some(last),
        }
    }

    /// Rescales the last observed dividend, as if the whole history had been
    /// multiplied by `factor`. Growth rates are unchanged.
    pub fn rescale_last(&mut self, factor: f64) {
        debug_assert!(factor > 0.0);
        if let Some(last) = &mut self.last {
            *last *= factor;
        }
    }

    /// Number of dividends observed so far.
    pub fn observations(&self) -> usize {
        self.count + usize::from(self.last.is_some())
    }

    pub fn estimate(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::InsufficientHistory {
                need: 2,
                got: self.observations(),
            });
        }
        let var = if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        };
        Ok(libm::expm1(self.mean + 0.5 * var))
    }
}

/// Variance of the sum of `m` consecutive values of a stationary unit-variance
/// AR(1) series with coefficient `a`.
fn ar1_sum_variance(m: usize, a: f64) -> f64 {
    let m = m as f64;
    if a == 0.0 {
        return m;
    }
    m * (1.0 + a) / (1.0 - a) - 2.0 * a * (1.0 - libm::pow(a, m)) / ((1.0 - a) * (1.0 - a))
}

/// Draws the estimator state that `steps` growth rates of the stationary dividend
/// process would produce, without simulating them.
///
/// The driver splits into two independent AR(1) chains (even and odd steps), so
/// the mean growth rate is exactly Gaussian. The sample variance is drawn from its
/// large-sample normal approximation. `z_mean` and `z_var` are standard normal
/// draws.
pub fn sampled_history(
    steps: usize,
    g_step: f64,
    sigma_step: f64,
    omega: f64,
    last: f64,
    z_mean: f64,
    z_var: f64,
) -> GrowthEstimator {
    let n = steps.max(1);
    let var_sum = ar1_sum_variance(n.div_ceil(2), omega) + ar1_sum_variance(n / 2, omega);
    let mean_u = z_mean * libm::sqrt(var_sum) / n as f64;
    let s2 = sigma_step * sigma_step;
    let mean = g_step - 0.5 * s2 + sigma_step * mean_u;
    let rel_sd = libm::sqrt(2.0 * (1.0 + omega * omega) / ((1.0 - omega * omega) * n as f64));
    let variance = s2 * (1.0 + rel_sd * z_var).max(0.0);
    GrowthEstimator::from_moments(n, mean, variance, last)
}

/// Growth estimate from an explicit dividend window.
pub fn estimate_growth(dividends: &[f64]) -> Result<f64> {
    if dividends.len() < 2 {
        return Err(Error::InsufficientHistory {
            need: 2,
            got: dividends.len(),
        });
    }
    if dividends.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Domain("dividends must be positive"));
    }
    let mut est = GrowthEstimator::new();
    dividends.iter().for_each(|d| est.observe(*d));
    est.estimate()
}

/// Value-investor valuation: Gordon value with the estimated growth rate and the
/// current dividend grown one step.
pub fn vi_value(estimator: &GrowthEstimator, d_curr: f64, k_step: f64) -> Result<f64> {
    let g_hat = estimator.estimate()?;
    value_from_current(d_curr, g_hat, k_step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::MarketParams;
    use crate::processes::DividendState;
    use crate::rng::{NormalStream, DIVIDEND_STREAM};
    use alloc::vec::Vec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn gordon_examples() {
        assert_relative_eq!(
            gordon_value(1.0, 0.01, 0.02).unwrap(),
            100.0,
            epsilon = 1e-9
        );
        assert_relative_eq!(gordon_value(3.0, 0.0, 0.04).unwrap(), 75.0, epsilon = 1e-12);
        assert_relative_eq!(
            gordon_value(2.0, 4e-5, 8e-5).unwrap(),
            50_000.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn sampled_history_matches_simulated_distribution() {
        let p = MarketParams::default();
        let (g, s, w) = (p.g_step(), p.sigma_step(), p.omega);
        let n = 2000;
        let runs = 400;
        let mut z = NormalStream::new(21, "history", 0);
        let mut simulated = Vec::new();
        let mut sampled = Vec::new();
        for i in 0..runs {
            let mut d = DividendState::from_params(1.0, &p);
            // start the driver from its stationary law
            d.u_lag1 = z.draw();
            d.u_lag2 = z.draw();
            let mut est = GrowthEstimator::new();
            est.observe(1.0);
            for _ in 0..n {
                est.observe(d.step_dividend(z.draw()));
            }
            simulated.push(est.mean);
            let h = sampled_history(n, g, s, w, 1.0, z.draw(), z.draw());
            sampled.push(h.mean);
            if i == 0 {
                assert_eq!(h.observations(), n + 1);
            }
        }
        let moments = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
            (m, var)
        };
        let (m1, v1) = moments(&simulated);
        let (m2, v2) = moments(&sampled);
        let se = libm::sqrt(v1 / runs as f64);
        assert!((m1 - m2).abs() < 4.0 * se);
        // variance ratio of two samples of 400: F-ratio well inside [0.75, 1.33]
        assert!((0.75..1.33).contains(&(v1 / v2)));
    }

    #[test]
    fn ar1_sum_variance_small_cases() {
        assert_relative_eq!(ar1_sum_variance(1, 0.3), 1.0, epsilon = 1e-12);
        assert_relative_eq!(ar1_sum_variance(2, 0.3), 2.6, epsilon = 1e-12);
        assert_relative_eq!(ar1_sum_variance(3, 0.0), 3.0);
    }

    #[test]
    fn gordon_rejects_non_convergent() {
        assert!(matches!(
            gordon_value(1.0, 0.02, 0.02),
            Err(Error::NonConvergent { .. })
        ));
        assert!(gordon_value(1.0, 0.03, 0.02).is_err());
    }

    #[test]
    fn growth_of_constant_and_doubling_series() {
        assert_eq!(estimate_growth(&[2.0; 10]).unwrap(), 0.0);
        let doubling: Vec<f64> = (0..8).map(|i| libm::pow(2.0, i as f64)).collect();
        assert_relative_eq!(estimate_growth(&doubling).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn growth_needs_two_points() {
        assert!(matches!(
            estimate_growth(&[1.0]),
            Err(Error::InsufficientHistory { need: 2, got: 1 })
        ));
        assert!(estimate_growth(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn growth_estimate_is_consistent() {
        // 4e6 steps: standard error of the estimate is ~3% of g_step
        let p = MarketParams::default();
        let mut st = DividendState::new(1.0, p.g_step(), p.sigma_step(), 0.0);
        let mut z = NormalStream::new(5, DIVIDEND_STREAM, 0);
        let mut est = GrowthEstimator::new();
        est.observe(st.d_curr);
        for _ in 0..4_000_000 {
            est.observe(st.step_dividend(z.draw()));
        }
        let g = est.estimate().unwrap();
        let target = p.g_expected_step();
        assert!((g - target).abs() < 0.1 * target, "{g} vs {target}");
    }

    proptest! {
        #[test]
        fn vi_value_is_scale_equivariant(
            ratios in proptest::collection::vec(0.9f64..1.1, 2..40),
            scale in 0.01f64..100.0,
        ) {
            let mut d = 1.0;
            let series: Vec<f64> = ratios.iter().map(|r| { d *= r; d }).collect();
            let mut a = GrowthEstimator::new();
            let mut b = GrowthEstimator::new();
            series.iter().for_each(|x| { a.observe(*x); b.observe(*x * scale); });
            let k = 10.0; // large enough to always converge
            let va = vi_value(&a, *series.last().unwrap(), k).unwrap();
            let vb = vi_value(&b, *series.last().unwrap() * scale, k).unwrap();
            prop_assert!((vb / va - scale).abs() <= 1e-9 * scale);
        }
    }
}
