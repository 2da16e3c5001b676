//! Trading signals and the demand function shared by all strategies.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    NoiseTrader,
    ValueInvestor,
    TrendFollower,
    Kelly,
}

impl StrategyKind {
    pub const ECOLOGY: [StrategyKind; 3] = [
        StrategyKind::NoiseTrader,
        StrategyKind::ValueInvestor,
        StrategyKind::TrendFollower,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StrategyKind::NoiseTrader => "nt",
            StrategyKind::ValueInvestor => "vi",
            StrategyKind::TrendFollower => "tf",
            StrategyKind::Kelly => "kelly",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyParams {
    pub kind: StrategyKind,
    /// Leverage limit.
    pub lambda_max: f64,
    /// Signal aggressiveness.
    pub c: f64,
}

impl StrategyParams {
    pub fn new(kind: StrategyKind, lambda_max: f64, c: f64) -> Self {
        debug_assert!(lambda_max > 0.0 && c > 0.0);
        Self {
            kind,
            lambda_max,
            c,
        }
    }
}

fn require_positive(x: f64, what: &'static str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(what))
    }
}

pub fn signal_value_investor(v_vi: f64, p: f64) -> Result<f64> {
    require_positive(v_vi, "value estimate must be positive")?;
    require_positive(p, "price must be positive")?;
    Ok(libm::log2(v_vi) - libm::log2(p))
}

/// Positive when prices rose between the two most recent cleared prices.
pub fn signal_trend_follower(p_lag1: f64, p_lag2: f64) -> Result<f64> {
    require_positive(p_lag1, "price must be positive")?;
    require_positive(p_lag2, "price must be positive")?;
    Ok(libm::log2(p_lag1) - libm::log2(p_lag2))
}

pub fn signal_noise_trader(x: f64, v_vi: f64, p: f64) -> Result<f64> {
    require_positive(x, "noise factor must be positive")?;
    require_positive(v_vi, "value estimate must be positive")?;
    require_positive(p, "price must be positive")?;
    Ok(libm::log2(x * v_vi) - libm::log2(p))
}

/// `tanh(c * phi) + 1/2`, the fraction of `lambda_max * wealth` held in stock.
#[inline]
pub fn demand_shape(c: f64, phi: f64) -> f64 {
    libm::tanh(c * phi) + 0.5
}

/// Desired share holding; excess demand is this minus the current holding.
pub fn target_position(wealth: f64, params: &StrategyParams, phi: f64, p: f64) -> f64 {
    wealth * params.lambda_max / p * demand_shape(params.c, phi)
}

pub fn leverage_of(params: &StrategyParams, phi: f64) -> f64 {
    params.lambda_max * demand_shape(params.c, phi).abs()
}

/// Exponentially weighted first and second moments of a pair of series.
#[derive(Debug, Clone, PartialEq)]
pub struct EwPair {
    alpha: f64,
    n: usize,
    mean: [f64; 2],
    var: [f64; 2],
    cov: f64,
}

impl EwPair {
    pub fn with_half_life(steps: f64) -> Self {
        let alpha = 1.0 - libm::pow(0.5, 1.0 / steps);
        Self {
            alpha,
            n: 0,
            mean: [0.0; 2],
            var: [0.0; 2],
            cov: 0.0,
        }
    }

    pub fn update(&mut self, x: f64, y: f64) {
        if self.n == 0 {
            self.mean = [x, y];
        } else {
            // equal weights until the window has filled
            let a = self.alpha.max(1.0 / (self.n + 1) as f64);
            let dx = x - self.mean[0];
            let dy = y - self.mean[1];
            self.mean[0] += a * dx;
            self.mean[1] += a * dy;
            self.var[0] = (1.0 - a) * (self.var[0] + a * dx * dx);
            self.var[1] = (1.0 - a) * (self.var[1] + a * dy * dy);
            self.cov = (1.0 - a) * (self.cov + a * dx * dy);
        }
        self.n += 1;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> [f64; 2] {
        self.mean
    }

    pub fn std(&self) -> [f64; 2] {
        [libm::sqrt(self.var[0]), libm::sqrt(self.var[1])]
    }

    pub fn corr(&self) -> f64 {
        let d = libm::sqrt(self.var[0] * self.var[1]);
        if d > 0.0 {
            (self.cov / d).clamp(-1.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Default half-life of the Kelly investor's moment estimates: ten years.
pub const KELLY_HALF_LIFE: f64 = 2520.0;

/// The Kelly investor's running estimates of the dividend process and of the
/// residual price factor `Y` (total stock return net of dividend growth).
#[derive(Debug, Clone, PartialEq)]
pub struct KellyEstimates {
    pub g_hat: f64,
    pub sigma_hat: f64,
    pub omega_hat: f64,
    pub mu_y_hat: f64,
    pub sigma_y_hat: f64,
    pub rho_hat: f64,
    returns: EwPair,
    u_autocov: EwPair,
    u_lags: [f64; 2],
}

impl KellyEstimates {
    pub fn new(half_life: f64) -> Self {
        Self {
            g_hat: 0.0,
            sigma_hat: 0.0,
            omega_hat: 0.0,
            mu_y_hat: 0.0,
            sigma_y_hat: 0.0,
            rho_hat: 0.0,
            returns: EwPair::with_half_life(half_life),
            u_autocov: EwPair::with_half_life(half_life),
            u_lags: [0.0; 2],
        }
    }

    pub fn observations(&self) -> usize {
        self.returns.count()
    }

    /// Latest driver value inferred from dividends. Trading happens one step after
    /// it was observed, so through the lag-two autocorrelation it predicts the
    /// dividend that the next holding period earns.
    pub fn predictable_u(&self) -> f64 {
        self.u_lags[0]
    }

    /// Feeds the gross dividend return `D(t)/D(t-1)` and the gross total stock
    /// return over the same step.
    pub fn update(&mut self, dividend_return: f64, total_return: f64) {
        debug_assert!(dividend_return > 0.0 && total_return > 0.0);
        let ld = libm::log(dividend_return);
        let ly = libm::log(total_return) - ld;
        self.returns.update(ld, ly);
        let [md, my] = self.returns.mean();
        let [sd, sy] = self.returns.std();
        self.sigma_hat = sd;
        self.sigma_y_hat = sy;
        self.g_hat = md + 0.5 * sd * sd;
        self.mu_y_hat = my + 0.5 * sy * sy;
        self.rho_hat = self.returns.corr();

        let u = if sd > 0.0 { (ld - md) / sd } else { 0.0 };
        if self.returns.count() > 2 {
            self.u_autocov.update(u, self.u_lags[1]);
            let [s0, s2] = self.u_autocov.std();
            self.omega_hat = if s0 * s2 > 0.0 {
                self.u_autocov.corr()
            } else {
                0.0
            };
        }
        self.u_lags = [u, self.u_lags[0]];
    }
}

pub fn update_kelly_estimates(
    mut est: KellyEstimates,
    dividend_return: f64,
    total_return: f64,
) -> KellyEstimates {
    est.update(dividend_return, total_return);
    est
}

/// Kelly-optimal stock fraction for the log-growth objective, clamped to the
/// leverage limit.
pub fn kelly_fraction(
    est: &KellyEstimates,
    u_lag1: f64,
    r_step: f64,
    lambda_max: f64,
) -> Result<f64> {
    let denom = est.sigma_hat * est.sigma_hat + est.sigma_y_hat * est.sigma_y_hat;
    if !(denom > 0.0) {
        return Err(Error::DegenerateVariance(
            "kelly fraction needs positive return variance",
        ));
    }
    let num = est.g_hat + est.mu_y_hat + est.sigma_hat * est.omega_hat * u_lag1
        - r_step
        - 2.0 * est.rho_hat * est.sigma_hat * est.sigma_y_hat;
    Ok((num / denom).clamp(-lambda_max, lambda_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::NormalStream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const VI: StrategyParams = StrategyParams {
        kind: StrategyKind::ValueInvestor,
        lambda_max: 1.0,
        c: 10.0,
    };

    #[test]
    fn value_investor_signal() {
        assert_eq!(signal_value_investor(100.0, 100.0).unwrap(), 0.0);
        assert_relative_eq!(signal_value_investor(200.0, 100.0).unwrap(), 1.0);
        assert_relative_eq!(
            signal_value_investor(100.0, 150.0).unwrap(),
            -0.584_962_500_721_156,
            epsilon = 1e-12
        );
        assert!(signal_value_investor(0.0, 1.0).is_err());
        assert!(signal_value_investor(1.0, -1.0).is_err());
    }

    #[test]
    fn trend_signal_is_positive_on_rising_prices() {
        assert_eq!(signal_trend_follower(5.0, 5.0).unwrap(), 0.0);
        assert_relative_eq!(
            signal_trend_follower(20.0, 10.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            signal_trend_follower(101.0, 100.0).unwrap(),
            0.014_355_292_977_070_055,
            epsilon = 1e-12
        );
        assert!(signal_trend_follower(1.0, 0.0).is_err());
    }

    #[test]
    fn noise_trader_signal() {
        assert_eq!(signal_noise_trader(1.0, 50.0, 50.0).unwrap(), 0.0);
        assert_relative_eq!(signal_noise_trader(2.0, 50.0, 50.0).unwrap(), 1.0);
        assert_relative_eq!(
            signal_noise_trader(0.9, 100.0, 95.0).unwrap(),
            libm::log2(90.0 / 95.0),
            epsilon = 1e-12
        );
        assert!((signal_noise_trader(0.9, 100.0, 95.0).unwrap() + 0.0780).abs() < 1e-4);
        assert!(signal_noise_trader(-0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn target_position_examples() {
        assert_relative_eq!(target_position(100.0, &VI, 0.0, 10.0), 5.0);
        assert_relative_eq!(target_position(100.0, &VI, 50.0, 10.0), 15.0);
        assert_relative_eq!(target_position(100.0, &VI, -50.0, 10.0), -5.0);
        assert_relative_eq!(
            target_position(100.0, &VI, 0.1, 10.0),
            10.0 * (libm::tanh(1.0) + 0.5),
            epsilon = 1e-12
        );
        assert!((target_position(100.0, &VI, 0.1, 10.0) - 12.6159).abs() < 1e-4);
    }

    #[test]
    fn leverage_examples() {
        let p = StrategyParams::new(StrategyKind::ValueInvestor, 8.0, 10.0);
        assert_eq!(leverage_of(&p, 0.0), 4.0);
        assert_relative_eq!(leverage_of(&p, 100.0), 12.0);
        assert_relative_eq!(
            leverage_of(&p, -0.1),
            8.0 * (0.5 - libm::tanh(1.0)).abs(),
            epsilon = 1e-12
        );
        assert!((leverage_of(&VI, -0.1) - 0.2616).abs() < 1e-4);
    }

    fn estimates(
        g: f64,
        mu_y: f64,
        sigma: f64,
        omega: f64,
        rho: f64,
        sigma_y: f64,
    ) -> KellyEstimates {
        KellyEstimates {
            g_hat: g,
            sigma_hat: sigma,
            omega_hat: omega,
            mu_y_hat: mu_y,
            sigma_y_hat: sigma_y,
            rho_hat: rho,
            ..KellyEstimates::new(KELLY_HALF_LIFE)
        }
    }

    #[test]
    fn kelly_fraction_examples() {
        let zero = estimates(4e-5, 0.0, 0.01, 0.0, 0.0, 0.01);
        assert_eq!(kelly_fraction(&zero, 0.0, 4e-5, 2.0).unwrap(), 0.0);
        let huge = estimates(1.0, 0.0, 0.01, 0.0, 0.0, 0.01);
        assert_eq!(kelly_fraction(&huge, 0.0, 0.0, 2.0).unwrap(), 2.0);
        let e = estimates(4e-5, 0.0, 0.00378, 0.1, 0.0, 0.00378);
        let unclamped: f64 = 0.1 * 0.00378 / (2.0 * 0.00378 * 0.00378);
        assert!((unclamped - 13.2).abs() < 0.05);
        assert_eq!(kelly_fraction(&e, 1.0, 4e-5, 3.0).unwrap(), 3.0);
        assert_relative_eq!(
            kelly_fraction(&e, 1.0, 4e-5, 20.0).unwrap(),
            unclamped,
            epsilon = 1e-9
        );
    }

    #[test]
    fn kelly_fraction_rejects_zero_variance() {
        let e = estimates(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            kelly_fraction(&e, 0.0, 0.0, 1.0),
            Err(Error::DegenerateVariance(_))
        ));
    }

    #[test]
    fn kelly_estimates_first_observation_and_constant_inputs() {
        let mut e = KellyEstimates::new(KELLY_HALF_LIFE);
        e.update(1.001, 1.003);
        assert_relative_eq!(e.g_hat, libm::log(1.001));
        assert_relative_eq!(
            e.mu_y_hat,
            libm::log(1.003) - libm::log(1.001),
            epsilon = 1e-15
        );
        for _ in 0..1000 {
            e.update(1.001, 1.003);
        }
        assert_eq!(e.sigma_hat, 0.0);
        assert_eq!(e.sigma_y_hat, 0.0);
    }

    #[test]
    fn kelly_estimates_recover_known_moments() {
        // dividend log returns ~ N(m_d, s_d), Y log returns correlated with them
        let (m_d, s_d, m_y, s_y, rho) = (2e-4, 0.004, -1e-4, 0.006, -0.3);
        let mut e = KellyEstimates::new(1e9); // effectively equal weights
        let mut z = NormalStream::new(17, "kelly-test", 0);
        let n = 10_000;
        for _ in 0..n {
            let a = z.draw();
            let b = rho * a + libm::sqrt(1.0 - rho * rho) * z.draw();
            let ld = m_d + s_d * a;
            let ly = m_y + s_y * b;
            e.update(libm::exp(ld), libm::exp(ld + ly));
        }
        let nf = n as f64;
        assert!((e.sigma_hat - s_d).abs() < 3.0 * s_d / libm::sqrt(2.0 * nf));
        assert!((e.sigma_y_hat - s_y).abs() < 3.0 * s_y / libm::sqrt(2.0 * nf));
        assert!((e.g_hat - (m_d + 0.5 * s_d * s_d)).abs() < 3.0 * s_d / libm::sqrt(nf));
        assert!((e.mu_y_hat - (m_y + 0.5 * s_y * s_y)).abs() < 3.0 * s_y / libm::sqrt(nf));
        assert!((e.rho_hat - rho).abs() < 3.0 * (1.0 - rho * rho) / libm::sqrt(nf));
        assert!(e.omega_hat.abs() < 3.0 / libm::sqrt(nf));
    }

    proptest! {
        #[test]
        fn target_position_monotone_and_bounded(
            w in 1.0f64..1e6, lam in 0.1f64..10.0, c in 0.1f64..20.0,
            p in 0.1f64..1e3, a in -3.0f64..3.0, b in -3.0f64..3.0,
        ) {
            let params = StrategyParams::new(StrategyKind::NoiseTrader, lam, c);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let s_lo = target_position(w, &params, lo, p);
            let s_hi = target_position(w, &params, hi, p);
            prop_assert!(s_lo <= s_hi);
            for s in [s_lo, s_hi] {
                let v = s * p;
                prop_assert!(v >= -0.5 * w * lam * (1.0 + 1e-12) && v <= 1.5 * w * lam * (1.0 + 1e-12));
            }
        }

        #[test]
        fn signals_are_scale_invariant(
            v in 0.1f64..1e3, p in 0.1f64..1e3, x in 0.1f64..3.0, s in 1e-3f64..1e3,
        ) {
            let a = signal_value_investor(v, p).unwrap();
            let b = signal_value_investor(v * s, p * s).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
            let a = signal_noise_trader(x, v, p).unwrap();
            let b = signal_noise_trader(x, v * s, p * s).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
            let a = signal_trend_follower(v, p).unwrap();
            let b = signal_trend_follower(v * s, p * s).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
            let c = signal_trend_follower(p, v).unwrap();
            prop_assert!((a + c).abs() < 1e-12);
        }

        #[test]
        fn kelly_fraction_within_limits(
            g in -0.1f64..0.1, mu in -0.1f64..0.1, s in 1e-4f64..0.1, om in -0.9f64..0.9,
            rho in -1.0f64..1.0, sy in 1e-4f64..0.1, u in -5.0f64..5.0, lam in 0.1f64..10.0,
        ) {
            let e = estimates(g, mu, s, om, rho, sy);
            let x = kelly_fraction(&e, u, 1e-4, lam).unwrap();
            prop_assert!(x >= -lam && x <= lam);
        }
    }
}
