//! Walrasian market clearing: the price that zeroes aggregate excess demand.
//!
//! Each fund contributes a [`DemandCurve`]. The search runs in log price: it
//! first brackets a sign change of the aggregate excess demand by geometric
//! expansion around the previous price, then refines with Newton steps that fall
//! back to bisection whenever they leave the bracket or stall. When no sign
//! change exists within the allowed move, the squared excess demand is minimised
//! with a scalar quasi-Newton iteration instead.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::strategies::{demand_shape, StrategyParams};

/// How a fund's signal depends on the candidate price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Signal {
    /// `phi(p) = log2_anchor - log2(p)`: value investors and noise traders.
    PriceRelative { log2_anchor: f64 },
    /// A signal fixed before clearing: trend followers.
    Fixed(f64),
    /// A fixed fraction of wealth held in stock, bypassing the tanh shape: Kelly.
    Fraction(f64),
}

/// One fund's demand as a function of the candidate price.
///
/// Wealth is affine in the candidate price, `base + slope * p`: the slope is the
/// part of the current holding whose mark-to-market gain is retained by the fund.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandCurve {
    pub params: StrategyParams,
    pub signal: Signal,
    pub wealth_base: f64,
    pub wealth_slope: f64,
    pub holding: f64,
}

impl DemandCurve {
    pub fn wealth(&self, p: f64) -> f64 {
        self.wealth_base + self.wealth_slope * p
    }

    pub fn phi(&self, p: f64) -> f64 {
        match self.signal {
            Signal::PriceRelative { log2_anchor } => log2_anchor - libm::log2(p),
            Signal::Fixed(phi) => phi,
            Signal::Fraction(_) => 0.0,
        }
    }

    pub fn target(&self, p: f64) -> f64 {
        let w = self.wealth(p);
        match self.signal {
            Signal::Fraction(x) => x * w / p,
            _ => w * self.params.lambda_max / p * demand_shape(self.params.c, self.phi(p)),
        }
    }

    pub fn excess(&self, p: f64) -> f64 {
        self.target(p) - self.holding
    }

    pub fn excess_derivative(&self, p: f64) -> f64 {
        let w = self.wealth(p);
        // d/dp (w(p)/p)
        let dw_over_p = (self.wealth_slope * p - w) / (p * p);
        match self.signal {
            Signal::Fraction(x) => x * dw_over_p,
            Signal::Fixed(phi) => {
                self.params.lambda_max * dw_over_p * demand_shape(self.params.c, phi)
            }
            Signal::PriceRelative { .. } => {
                let c = self.params.c;
                let t = libm::tanh(c * self.phi(p));
                let dphi = -1.0 / (p * LN_2);
                self.params.lambda_max * (dw_over_p * (t + 0.5) + w / p * c * (1.0 - t * t) * dphi)
            }
        }
    }
}

fn check_price(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain("candidate price must be positive and finite"))
    }
}

pub fn aggregate_excess_demand(curves: &[DemandCurve], p: f64) -> Result<f64> {
    check_price(p)?;
    Ok(curves.iter().map(|c| c.excess(p)).sum())
}

pub fn demand_derivative(curves: &[DemandCurve], p: f64) -> Result<f64> {
    check_price(p)?;
    Ok(curves.iter().map(|c| c.excess_derivative(p)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClearingMode {
    Root,
    Minimized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClearingResult {
    pub price: f64,
    /// Aggregate excess demand at `price`, in shares.
    pub residual: f64,
    pub mode: ClearingMode,
    /// Excess-demand evaluations spent.
    pub iterations: usize,
    /// The price hit the per-step move limit.
    pub bound_hit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClearingConfig {
    /// Root tolerance on aggregate excess demand, in shares.
    pub abs_tol: f64,
    pub max_iterations: usize,
    /// Largest allowed move per step, as a power of two.
    pub max_move_log2: f64,
    /// First bracketing offset in log price.
    pub initial_step: f64,
}

impl ClearingConfig {
    /// Defaults for a market with `supply` shares outstanding.
    pub fn for_supply(supply: f64) -> Self {
        Self {
            abs_tol: 1e-8 * supply,
            max_iterations: 200,
            max_move_log2: 10.0,
            initial_step: 1e-3,
        }
    }
}

/// Excess demand as a function of log price, with its derivative.
struct LogObjective<'a> {
    curves: &'a [DemandCurve],
    evals: usize,
}

impl LogObjective<'_> {
    fn value(&mut self, x: f64) -> f64 {
        self.evals += 1;
        let p = libm::exp(x);
        self.curves.iter().map(|c| c.excess(p)).sum()
    }

    fn value_and_slope(&mut self, x: f64) -> (f64, f64) {
        self.evals += 1;
        let p = libm::exp(x);
        self.curves.iter().fold((0.0, 0.0), |(f, d), c| {
            (f + c.excess(p), d + c.excess_derivative(p) * p)
        })
    }
}

pub fn find_clearing_price(
    curves: &[DemandCurve],
    p_prev: f64,
    config: &ClearingConfig,
) -> Result<ClearingResult> {
    check_price(p_prev)?;
    if curves.is_empty() {
        return Err(Error::Domain("clearing needs at least one fund"));
    }
    let mut obj = LogObjective { curves, evals: 0 };
    let x0 = libm::log(p_prev);
    let limit = config.max_move_log2 * LN_2;
    let (f0, d0) = obj.value_and_slope(x0);
    let mut best = (x0, f0);
    if f0.abs() <= config.abs_tol {
        return Ok(finish(best, ClearingMode::Root, &obj, x0, limit));
    }

    // Bracket: probe the Newton direction first, then expand geometrically on
    // both sides, preferring the side the excess demand points to.
    let up_first = f0 > 0.0;
    let mut bracket = None;
    let newton = if d0 != 0.0 { -f0 / d0 } else { 0.0 };
    if newton.is_finite() && newton != 0.0 && newton.abs() < limit {
        let f1 = obj.value(x0 + newton);
        if f1.abs() < best.1.abs() {
            best = (x0 + newton, f1);
        }
        if f1.signum() != f0.signum() {
            bracket = Some(order((x0, f0), (x0 + newton, f1)));
        }
    }
    let mut step = config.initial_step;
    let mut last = [(x0, f0); 2];
    while bracket.is_none() && step <= limit * (1.0 + 1e-12) {
        for (side, dir) in if up_first {
            [(0, 1.0), (1, -1.0)]
        } else {
            [(1, -1.0), (0, 1.0)]
        } {
            let x = x0 + dir * step;
            let f = obj.value(x);
            if f.abs() < best.1.abs() {
                best = (x, f);
            }
            if f.signum() != last[side].1.signum() {
                bracket = Some(order(last[side], (x, f)));
                break;
            }
            last[side] = (x, f);
        }
        if step < limit && step * 2.0 > limit {
            step = limit;
        } else {
            step *= 2.0;
        }
    }

    if let Some(((mut a, mut fa), (mut b, _))) = bracket {
        let mut x = best.0.clamp(a, b);
        let mut prev_dx = b - a;
        for _ in 0..config.max_iterations {
            let (f, d) = obj.value_and_slope(x);
            if f.abs() < best.1.abs() {
                best = (x, f);
            }
            if f.abs() <= config.abs_tol {
                return Ok(finish((x, f), ClearingMode::Root, &obj, x0, limit));
            }
            if f.signum() == fa.signum() {
                a = x;
                fa = f;
            } else {
                b = x;
            }
            let newton = if d != 0.0 { x - f / d } else { f64::NAN };
            let next = if newton > a && newton < b && (newton - x).abs() < 0.5 * prev_dx.abs() {
                newton
            } else {
                0.5 * (a + b)
            };
            prev_dx = next - x;
            if next == x || b - a <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                break;
            }
            x = next;
        }
        let mode = if best.1.abs() <= config.abs_tol {
            ClearingMode::Root
        } else {
            ClearingMode::Minimized
        };
        return Ok(finish(best, mode, &obj, x0, limit));
    }

    best = minimize_squared(
        &mut obj,
        best,
        x0 - limit,
        x0 + limit,
        config.max_iterations,
    );
    if !(libm::exp(best.0).is_finite() && best.1.is_finite()) {
        return Err(Error::ClearingFailed { t: 0 });
    }
    let mode = if best.1.abs() <= config.abs_tol {
        ClearingMode::Root
    } else {
        ClearingMode::Minimized
    };
    Ok(finish(best, mode, &obj, x0, limit))
}

fn order(a: (f64, f64), b: (f64, f64)) -> ((f64, f64), (f64, f64)) {
    if a.0 <= b.0 {
        (a, b)
    } else {
        (b, a)
    }
}

fn finish(
    best: (f64, f64),
    mode: ClearingMode,
    obj: &LogObjective,
    x0: f64,
    limit: f64,
) -> ClearingResult {
    ClearingResult {
        price: libm::exp(best.0),
        residual: best.1,
        mode,
        iterations: obj.evals,
        bound_hit: (best.0 - x0).abs() >= limit * (1.0 - 1e-9),
    }
}

/// Scalar quasi-Newton descent on `F(x)^2` within `[lo, hi]`, starting from the
/// best point seen so far. Curvature starts from the Gauss-Newton estimate and is
/// updated by secants; steps are backtracked until they decrease the objective.
fn minimize_squared(
    obj: &mut LogObjective,
    start: (f64, f64),
    lo: f64,
    hi: f64,
    max_iterations: usize,
) -> (f64, f64) {
    let (mut x, _) = start;
    let (mut f, d) = obj.value_and_slope(x);
    let mut grad = 2.0 * f * d;
    let mut inv_hess = if d != 0.0 { 1.0 / (2.0 * d * d) } else { 1.0 };
    for _ in 0..max_iterations {
        if grad == 0.0 || !grad.is_finite() {
            break;
        }
        let mut step = -inv_hess * grad;
        if !step.is_finite() || step == 0.0 {
            step = -grad.signum() * 1e-3;
        }
        let mut accepted = None;
        for _ in 0..40 {
            let xn = (x + step).clamp(lo, hi);
            let (fn_, dn) = obj.value_and_slope(xn);
            if fn_ * fn_ <= f * f + 1e-4 * grad * (xn - x) {
                accepted = Some((xn, fn_, dn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, dn)) = accepted else { break };
        let gn = 2.0 * fn_ * dn;
        let s = xn - x;
        let y = gn - grad;
        if s * y > 0.0 {
            inv_hess = s / y;
        }
        let done = s.abs() <= 1e-14 * x.abs().max(1.0);
        x = xn;
        f = fn_;
        grad = gn;
        if done {
            break;
        }
    }
    if f.abs() < start.1.abs() {
        (x, f)
    } else {
        start
    }
}

/// Clears several markets at once. Only the single-asset case is supported.
pub fn find_clearing_prices(
    markets: &[&[DemandCurve]],
    p_prev: &[f64],
    config: &ClearingConfig,
) -> Result<Vec<ClearingResult>> {
    if markets.len() != 1 || p_prev.len() != 1 {
        return Err(Error::InvalidConfig(alloc::format!(
            "multi-asset clearing supports exactly one asset, got {}",
            markets.len()
        )));
    }
    Ok(alloc::vec![find_clearing_price(
        markets[0], p_prev[0], config
    )?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::StrategyKind;
    use approx::assert_relative_eq;

    fn vi(wealth: f64, value: f64, holding: f64) -> DemandCurve {
        DemandCurve {
            params: StrategyParams::new(StrategyKind::ValueInvestor, 8.0, 10.0),
            signal: Signal::PriceRelative {
                log2_anchor: libm::log2(value),
            },
            wealth_base: wealth,
            wealth_slope: 0.0,
            holding,
        }
    }

    fn tf(wealth: f64, phi: f64, holding: f64) -> DemandCurve {
        DemandCurve {
            params: StrategyParams::new(StrategyKind::TrendFollower, 1.0, 4.0),
            signal: Signal::Fixed(phi),
            wealth_base: wealth,
            wealth_slope: 0.0,
            holding,
        }
    }

    #[test]
    fn fair_price_half_allocation_has_zero_excess() {
        let c = [vi(1000.0, 100.0, 1000.0 * 8.0 / 200.0)];
        assert_relative_eq!(
            aggregate_excess_demand(&c, 100.0).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn non_positive_price_is_a_domain_error() {
        let c = [vi(1.0, 1.0, 0.0)];
        assert!(aggregate_excess_demand(&c, 0.0).is_err());
        assert!(demand_derivative(&c, -1.0).is_err());
    }

    #[test]
    fn demand_explodes_near_zero_price() {
        let c = [vi(1000.0, 100.0, 40.0)];
        let a = aggregate_excess_demand(&c, 1e-3).unwrap();
        let b = aggregate_excess_demand(&c, 1e-6).unwrap();
        assert!(a > 0.0 && b > 100.0 * a);
    }

    #[test]
    fn trend_only_derivative_is_pure_inverse_price() {
        let c = [tf(500.0, 0.02, 3.0)];
        let p = 7.0;
        let target = c[0].target(p);
        assert_relative_eq!(
            demand_derivative(&c, p).unwrap(),
            -target / p,
            epsilon = 1e-12
        );
    }

    #[test]
    fn saturated_signal_derivative() {
        let c = [vi(1000.0, 1e6, 0.0)];
        let p = 10.0;
        let d = demand_derivative(&c, p).unwrap();
        assert_relative_eq!(d, -1.5 * 1000.0 * 8.0 / (p * p), max_relative = 1e-9);
    }

    #[test]
    fn clears_constructed_fixed_point() {
        let c = [vi(1000.0, 100.0, 40.0)];
        let r = find_clearing_price(&c, 95.0, &ClearingConfig::for_supply(40.0)).unwrap();
        assert_eq!(r.mode, ClearingMode::Root);
        assert_relative_eq!(r.price, 100.0, max_relative = 1e-9);
        assert!(r.residual.abs() <= 1e-8 * 40.0);
    }

    #[test]
    fn trend_dominated_market_without_root_minimizes() {
        // Trend follower short at any price: its demand -> -inf as p -> 0 dominates
        // the value investor's +inf, and both go to zero as p -> inf, so excess
        // demand stays below zero everywhere.
        let c = [vi(1.0, 100.0, 0.05), tf(1e6, -1.0, 10.0)];
        let q = 10.05;
        let r = find_clearing_price(&c, 100.0, &ClearingConfig::for_supply(q)).unwrap();
        assert_eq!(r.mode, ClearingMode::Minimized);
        assert!(r.price.is_finite() && r.price > 0.0);
        // residual can't be better than the supremum of excess demand on the grid
        let grid_best = (0..=2000)
            .map(|i| 100.0 * libm::exp2(-10.0 + 20.0 * i as f64 / 2000.0))
            .map(|p| aggregate_excess_demand(&c, p).unwrap().abs())
            .fold(f64::INFINITY, f64::min);
        assert!(r.residual.abs() <= grid_best * (1.0 + 1e-6));
    }

    #[test]
    fn multi_asset_rejects_more_than_one() {
        let c = [vi(1000.0, 100.0, 40.0)];
        let cfg = ClearingConfig::for_supply(40.0);
        assert_eq!(find_clearing_prices(&[&c], &[90.0], &cfg).unwrap().len(), 1);
        assert!(find_clearing_prices(&[&c, &c], &[90.0, 90.0], &cfg).is_err());
    }
}
