//! One simulated market: initialisation, per-step sequencing and capture.
//!
//! Each step draws the dividend and noise shocks, revalues the stock, clears the
//! market, settles every fund's carry and mark-to-market since the previous step,
//! applies investor flows (or replenishment), executes the trades at the clearing
//! price and checks solvency. Funds decide with wealth marked at the candidate
//! price, so realised leverage equals the demand function's leverage once the
//! market clears.

use alloc::vec;
use alloc::vec::Vec;

use crate::accounting::Fund;
use crate::clearing::{find_clearing_price, ClearingConfig, ClearingMode, DemandCurve, Signal};
use crate::ecology::simplex::WealthVector;
use crate::error::{Error, Result};
use crate::params::{MarketParams, STEPS_PER_YEAR};
use crate::processes::{DividendState, NoiseFactorState};
use crate::rng::{NormalStream, DIVIDEND_STREAM, NOISE_STREAM};
use crate::strategies::{
    kelly_fraction, KellyEstimates, StrategyKind, StrategyParams, KELLY_HALF_LIFE,
};
use crate::valuation::{sampled_history, value_from_current, vi_value, GrowthEstimator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunMode {
    /// Wealth follows performance: `W(t+1) = W(t) (1 + f pi(t))`.
    Reinvest { f: f64 },
    /// Each fund is replenished every step to its share of the target total.
    ConstantWealth,
}

/// How the fixed share supply is set at t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupplyRule {
    /// Every fund starts half invested in stock, `Q = W_T / (2 p0)`.
    HalfWealth,
    /// Every fund starts at its zero-signal leverage, `Q = sum W_i lambda_i / (2 p0)`.
    LeverageWeighted,
}

/// Target total wealth in constant-wealth runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WealthTarget {
    /// The nominal endowment, unchanged over the run.
    Nominal,
    /// The endowment scaled by the fundamental value relative to t = 0, which keeps
    /// total wealth in proportion to the growing dividend stream.
    TrackValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KellySpec {
    pub wealth: f64,
    pub lambda_max: f64,
    pub half_life: f64,
    /// Multiple of the Kelly fraction actually held.
    pub multiplier: f64,
}

impl Default for KellySpec {
    fn default() -> Self {
        Self {
            wealth: 1e6,
            lambda_max: 8.0,
            half_life: KELLY_HALF_LIFE,
            multiplier: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: MarketParams,
    pub mode: RunMode,
    /// Absolute endowments of (NT, VI, TF); a zero endowment removes the strategy.
    pub endowment: [f64; 3],
    pub horizon: usize,
    /// Steps excluded from analysis at the start of the run.
    pub warmup: usize,
    pub seed: u64,
    pub run_index: u64,
    /// Dividends observed by the value investors before trading starts.
    pub prehistory: usize,
    pub history: HistoryMode,
    pub supply: SupplyRule,
    pub wealth_target: WealthTarget,
    pub kelly: Option<KellySpec>,
    pub halt_on_insolvency: bool,
}

/// How the dividend prehistory reaches the growth estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryMode {
    /// Every prehistory dividend is simulated and observed.
    Simulated,
    /// The estimator's sufficient statistics are drawn directly, so the cost does
    /// not depend on the length of the history.
    Sampled,
}

pub const DEFAULT_TOTAL_WEALTH: f64 = 3e8;

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: MarketParams::default(),
            mode: RunMode::Reinvest { f: 1.0 },
            endowment: [DEFAULT_TOTAL_WEALTH / 3.0; 3],
            horizon: 20 * STEPS_PER_YEAR,
            warmup: STEPS_PER_YEAR,
            seed: 0,
            run_index: 0,
            prehistory: 100_000 * STEPS_PER_YEAR,
            history: HistoryMode::Sampled,
            supply: SupplyRule::HalfWealth,
            wealth_target: WealthTarget::TrackValue,
            kelly: None,
            halt_on_insolvency: true,
        }
    }
}

impl RunConfig {
    pub fn with_wealth(mut self, w: WealthVector, total: f64) -> Self {
        self.endowment = w.as_array().map(|x| x * total);
        self
    }

    pub fn years(mut self, years: usize) -> Self {
        self.horizon = years * STEPS_PER_YEAR;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.endowment.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return bad("endowments must be finite and non-negative");
        }
        if !(self.endowment.iter().sum::<f64>() > 0.0) {
            return bad("at least one strategy needs positive wealth");
        }
        if self.horizon < self.warmup {
            return bad("horizon must not be shorter than the warm-up");
        }
        if let RunMode::Reinvest { f } = self.mode {
            if !(f >= 0.0) {
                return bad("reinvestment rate must be non-negative");
            }
        }
        if self.prehistory < 2 {
            return bad("value investors need at least two dividends of history");
        }
        if let Some(k) = &self.kelly {
            if !(k.wealth > 0.0 && k.lambda_max > 0.0 && k.half_life > 0.0) {
                return bad("kelly wealth, leverage limit and half-life must be positive");
            }
        }
        Ok(())
    }
}

/// Per-step diagnostics of the clearing search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClearingDiag {
    pub mode: ClearingMode,
    pub iterations: usize,
    pub residual: f64,
    pub bound_hit: bool,
}

/// Time series for one fund. Entries are NaN while the fund is not trading.
#[derive(Debug, Clone, PartialEq)]
pub struct FundSeries {
    pub kind: StrategyKind,
    pub wealth: Vec<f64>,
    pub shares: Vec<f64>,
    pub leverage: Vec<f64>,
    /// Return over the step before investor flows.
    pub ret: Vec<f64>,
    /// Investor flow (deposit positive) applied during the step.
    pub flow: Vec<f64>,
}

impl FundSeries {
    fn new(kind: StrategyKind, capacity: usize) -> Self {
        Self {
            kind,
            wealth: Vec::with_capacity(capacity),
            shares: Vec::with_capacity(capacity),
            leverage: Vec::with_capacity(capacity),
            ret: Vec::with_capacity(capacity),
            flow: Vec::with_capacity(capacity),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Completed,
    Insolvent { t: usize, funds: Vec<usize> },
    Failed(Error),
}

/// Columnar record of a run; index `i` holds step `t = i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub supply: f64,
    pub warmup: usize,
    pub initial_price: f64,
    /// Dividend paid at the first settlement.
    pub initial_dividend: f64,
    pub price: Vec<f64>,
    pub value: Vec<f64>,
    pub value_vi: Vec<f64>,
    pub dividend: Vec<f64>,
    pub noise: Vec<f64>,
    pub clearing: Vec<ClearingDiag>,
    pub funds: Vec<FundSeries>,
    /// Steps where a fund's leverage before trading exceeded `1.5 * lambda_max`.
    pub leverage_violations: usize,
    pub accounting: AccountingDiag,
    pub outcome: RunOutcome,
}

impl RunOutput {
    pub fn len(&self) -> usize {
        self.price.len()
    }

    pub fn is_empty(&self) -> bool {
        self.price.is_empty()
    }

    pub fn fund(&self, kind: StrategyKind) -> Option<&FundSeries> {
        self.funds.iter().find(|f| f.kind == kind)
    }

    /// Relative wealth of the three ecology strategies at step index `i`.
    pub fn wealth_vector(&self, i: usize) -> [f64; 3] {
        let w = StrategyKind::ECOLOGY.map(|k| {
            self.fund(k)
                .map(|f| f.wealth[i])
                .filter(|w| w.is_finite())
                .unwrap_or(0.0)
                .max(0.0)
        });
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            w.map(|x| x / total)
        } else {
            [f64::NAN; 3]
        }
    }

    /// Simple per-step returns of the stock including dividends.
    pub fn stock_returns(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.price.len());
        let mut p_prev = self.initial_price;
        let mut d_prev = self.initial_dividend;
        for (p, d) in self.price.iter().zip(&self.dividend) {
            out.push((p + d_prev) / p_prev - 1.0);
            p_prev = *p;
            d_prev = *d;
        }
        out
    }
}

/// The evolving state of one market.
#[derive(Debug, Clone)]
pub struct Market {
    config: RunConfig,
    t: usize,
    price: f64,
    p_lag2: f64,
    dividend: DividendState,
    noise: NoiseFactorState,
    growth: GrowthEstimator,
    /// Dividend announced last step, paid to the shares held over this step.
    d_prev: f64,
    value0: f64,
    supply: f64,
    funds: Vec<Fund>,
    kelly: Option<(usize, KellyEstimates)>,
    dividend_shocks: NormalStream,
    noise_shocks: NormalStream,
    clearing: ClearingConfig,
    r_step: f64,
    k_step: f64,
    g_true: f64,
}

/// Everything observed during one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub price: f64,
    pub value: f64,
    pub value_vi: f64,
    pub dividend: f64,
    pub noise: f64,
    pub clearing: ClearingDiag,
    /// (wealth, shares, leverage, return, flow) per fund; NaN for inactive funds.
    pub funds: Vec<[f64; 5]>,
    pub leverage_violations: usize,
    pub insolvent: Vec<usize>,
    pub accounting: AccountingDiag,
}

/// Largest balance-sheet discrepancies seen, all relative to fund wealth.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AccountingDiag {
    /// Wealth change caused by trading at the clearing price.
    pub trade: f64,
    /// Realised leverage after trading against the demand-implied leverage.
    pub leverage: f64,
    /// Settled wealth against the affine wealth used during clearing.
    pub wealth_model: f64,
}

impl AccountingDiag {
    fn merge(&mut self, o: &AccountingDiag) {
        self.trade = self.trade.max(o.trade);
        self.leverage = self.leverage.max(o.leverage);
        self.wealth_model = self.wealth_model.max(o.wealth_model);
    }
}

impl Market {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let params = &config.params;
        let k_step = params.k_step();
        let g_true = params.g_expected_step();
        let p0 = params.initial_price;

        let mut dividend_shocks = NormalStream::new(config.seed, DIVIDEND_STREAM, config.run_index);
        let noise_shocks = NormalStream::new(config.seed, NOISE_STREAM, config.run_index);

        // Dividend history seen by the value investors before trading starts; the
        // level is rescaled afterwards so that V(0) = p0.
        let mut dividend = DividendState::from_params(1.0, params);
        let mut growth = match config.history {
            HistoryMode::Simulated => {
                let mut g = GrowthEstimator::new();
                g.observe(dividend.d_curr);
                for _ in 1..config.prehistory {
                    g.observe(dividend.step_dividend(dividend_shocks.draw()));
                }
                g
            }
            HistoryMode::Sampled => {
                dividend.u_lag1 = dividend_shocks.draw();
                dividend.u_lag2 = dividend_shocks.draw();
                let (z_mean, z_var) = (dividend_shocks.draw(), dividend_shocks.draw());
                sampled_history(
                    config.prehistory - 1,
                    dividend.g_step,
                    dividend.sigma_step,
                    dividend.omega,
                    dividend.d_curr,
                    z_mean,
                    z_var,
                )
            }
        };
        let d0 = p0 * (k_step - g_true) / (1.0 + g_true);
        growth.rescale_last(d0 / dividend.d_curr);
        dividend.d_curr = d0;
        let value0 = value_from_current(d0, g_true, k_step)?;

        let lambda_weight = |i: usize| match config.supply {
            SupplyRule::HalfWealth => 1.0,
            SupplyRule::LeverageWeighted => params.lambda[i],
        };
        let mut funds = Vec::with_capacity(4);
        let mut supply = 0.0;
        for (i, kind) in StrategyKind::ECOLOGY.into_iter().enumerate() {
            let w = config.endowment[i];
            let sp = StrategyParams::new(kind, params.lambda[i], params.c[i]);
            let mut fund = Fund::with_cash(sp, w);
            fund.alive = w > 0.0;
            let shares = w * lambda_weight(i) / (2.0 * p0);
            fund.apply_trade(shares, p0);
            supply += shares;
            funds.push(fund);
        }
        let kelly = config.kelly.as_ref().map(|k| {
            let sp = StrategyParams::new(StrategyKind::Kelly, k.lambda_max, 1.0);
            funds.push(Fund::with_cash(sp, k.wealth));
            (funds.len() - 1, KellyEstimates::new(k.half_life))
        });

        Ok(Self {
            clearing: ClearingConfig::for_supply(supply),
            r_step: params.r_step(),
            k_step,
            g_true,
            t: 0,
            price: p0,
            p_lag2: p0,
            dividend,
            noise: NoiseFactorState::from_params(params),
            growth,
            d_prev: d0,
            value0,
            supply,
            funds,
            kelly,
            dividend_shocks,
            noise_shocks,
            config,
        })
    }

    pub fn supply(&self) -> f64 {
        self.supply
    }

    pub fn price(&self) -> f64 {
        self.price
    }

    pub fn funds(&self) -> &[Fund] {
        &self.funds
    }

    pub fn time(&self) -> usize {
        self.t
    }

    pub fn dividend(&self) -> f64 {
        self.dividend.d_curr
    }

    fn wealth_targets(&self, value: f64) -> [f64; 3] {
        let scale = match self.config.wealth_target {
            WealthTarget::Nominal => 1.0,
            WealthTarget::TrackValue => value / self.value0,
        };
        self.config.endowment.map(|w| w * scale)
    }

    fn f(&self) -> f64 {
        match self.config.mode {
            RunMode::Reinvest { f } => f,
            RunMode::ConstantWealth => 1.0,
        }
    }

    /// Demand curves of all trading funds for the current step.
    fn demand_curves(
        &self,
        value_vi: f64,
        x: f64,
        targets: &[f64; 3],
    ) -> Result<Vec<(usize, DemandCurve)>> {
        let f = self.f();
        let tf_phi = libm::log2(self.price) - libm::log2(self.p_lag2);
        let mut curves = Vec::with_capacity(self.funds.len());
        for (i, fund) in self.funds.iter().enumerate() {
            if !fund.alive {
                continue;
            }
            let (wealth_base, wealth_slope) = match (self.config.mode, fund.params.kind) {
                (RunMode::ConstantWealth, k) if k != StrategyKind::Kelly => (targets[i], 0.0),
                _ => {
                    let carry = self.r_step * (fund.cash - fund.loans) + self.d_prev * fund.shares;
                    (
                        fund.wealth_prev + f * (carry - self.price * fund.shares),
                        f * fund.shares,
                    )
                }
            };
            let signal = match fund.params.kind {
                StrategyKind::NoiseTrader => Signal::PriceRelative {
                    log2_anchor: libm::log2(x * value_vi),
                },
                StrategyKind::ValueInvestor => Signal::PriceRelative {
                    log2_anchor: libm::log2(value_vi),
                },
                StrategyKind::TrendFollower => Signal::Fixed(tf_phi),
                StrategyKind::Kelly => Signal::Fraction(self.kelly_position()?),
            };
            curves.push((
                i,
                DemandCurve {
                    params: fund.params,
                    signal,
                    wealth_base,
                    wealth_slope,
                    holding: fund.shares,
                },
            ));
        }
        Ok(curves)
    }

    fn kelly_position(&self) -> Result<f64> {
        let (Some((idx, est)), Some(spec)) = (&self.kelly, &self.config.kelly) else {
            return Ok(0.0);
        };
        if est.observations() < 2 {
            return Ok(0.0);
        }
        let lambda = self.funds[*idx].params.lambda_max;
        match kelly_fraction(est, est.predictable_u(), self.r_step, lambda) {
            Ok(x) => Ok((spec.multiplier * x).clamp(-lambda, lambda)),
            Err(Error::DegenerateVariance(_)) => Ok(0.0),
            Err(e) => Err(e),
        }
    }

    /// Advances the market by one step.
    pub fn step(&mut self) -> Result<StepRecord> {
        let t = self.t + 1;
        let d_new = self.dividend.step_dividend(self.dividend_shocks.draw());
        self.growth.observe(d_new);
        let x = self.noise.step_noise_factor(self.noise_shocks.draw());
        let value = value_from_current(d_new, self.g_true, self.k_step)?;
        let value_vi = vi_value(&self.growth, d_new, self.k_step)?;
        let targets = self.wealth_targets(value);

        let curves = self.demand_curves(value_vi, x, &targets)?;
        let only: Vec<DemandCurve> = curves.iter().map(|(_, c)| *c).collect();
        let cleared =
            find_clearing_price(&only, self.price, &self.clearing).map_err(|e| match e {
                Error::ClearingFailed { .. } => Error::ClearingFailed { t },
                other => other,
            })?;
        let p = cleared.price;
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::ClearingFailed { t });
        }

        let f = self.f();
        let mut rows = vec![[f64::NAN; 5]; self.funds.len()];
        let mut violations = 0;
        let mut insolvent = Vec::new();
        let mut acc = AccountingDiag::default();
        for (i, curve) in &curves {
            let fund = &mut self.funds[*i];
            let settled = fund.accrue_and_settle(p, self.price, self.d_prev, self.r_step, f);
            let modelled = curve.wealth(p);
            let mut flow = settled.flow;
            if self.config.mode == RunMode::ConstantWealth
                && fund.params.kind != StrategyKind::Kelly
            {
                flow += fund.replenish_to(targets[*i], p);
            }
            if fund.wealth(p) > 0.0
                && fund.leverage(p) > 1.5 * fund.params.lambda_max * (1.0 + 1e-9)
            {
                violations += 1;
            }
            let target = curve.target(p);
            let before = fund.wealth(p);
            fund.apply_trade(target - fund.shares, p);
            let after = fund.wealth(p);
            if after > 0.0 {
                let implied = (target * p / curve.wealth(p)).abs();
                acc.merge(&AccountingDiag {
                    trade: (after - before).abs() / after,
                    leverage: (fund.leverage(p) - implied).abs(),
                    wealth_model: (before - modelled).abs() / after,
                });
            }
            if !fund.check_solvency(p) {
                insolvent.push(*i);
            }
            let w = fund.wealth(p);
            rows[*i] = [w, fund.shares, fund.shares.abs() * p / w, settled.ret, flow];
        }

        if let Some((_, est)) = &mut self.kelly {
            est.update(d_new / self.d_prev, (p + self.d_prev) / self.price);
        }

        for i in &insolvent {
            self.funds[*i].alive = false;
        }
        self.p_lag2 = self.price;
        self.price = p;
        self.d_prev = d_new;
        self.t = t;

        Ok(StepRecord {
            t,
            price: p,
            value,
            value_vi,
            dividend: d_new,
            noise: x,
            clearing: ClearingDiag {
                mode: cleared.mode,
                iterations: cleared.iterations,
                residual: cleared.residual,
                bound_hit: cleared.bound_hit,
            },
            funds: rows,
            leverage_violations: violations,
            accounting: acc,
            insolvent,
        })
    }
}

/// Initialises a market from `config`, for inspection before stepping.
pub fn init_market(config: RunConfig) -> Result<Market> {
    Market::new(config)
}

/// Runs a market over the configured horizon.
///
/// Configuration errors are returned as `Err`. Failures during the run (an
/// insolvency when halting is enabled, or a clearing failure) end the run early;
/// the partial record is returned with the reason in [`RunOutput::outcome`].
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let mut market = Market::new(config.clone())?;
    let horizon = config.horizon;
    let mut out = RunOutput {
        supply: market.supply,
        warmup: config.warmup,
        initial_price: market.price,
        initial_dividend: market.d_prev,
        price: Vec::with_capacity(horizon),
        value: Vec::with_capacity(horizon),
        value_vi: Vec::with_capacity(horizon),
        dividend: Vec::with_capacity(horizon),
        noise: Vec::with_capacity(horizon),
        clearing: Vec::with_capacity(horizon),
        funds: market
            .funds
            .iter()
            .map(|f| FundSeries::new(f.params.kind, horizon))
            .collect(),
        leverage_violations: 0,
        accounting: AccountingDiag::default(),
        outcome: RunOutcome::Completed,
    };
    for _ in 0..horizon {
        let rec = match market.step() {
            Ok(rec) => rec,
            Err(e) => {
                out.outcome = RunOutcome::Failed(e);
                break;
            }
        };
        out.price.push(rec.price);
        out.value.push(rec.value);
        out.value_vi.push(rec.value_vi);
        out.dividend.push(rec.dividend);
        out.noise.push(rec.noise);
        out.clearing.push(rec.clearing);
        for (series, row) in out.funds.iter_mut().zip(&rec.funds) {
            series.wealth.push(row[0]);
            series.shares.push(row[1]);
            series.leverage.push(row[2]);
            series.ret.push(row[3]);
            series.flow.push(row[4]);
        }
        out.leverage_violations += rec.leverage_violations;
        out.accounting.merge(&rec.accounting);
        if !rec.insolvent.is_empty() && config.halt_on_insolvency {
            out.outcome = RunOutcome::Insolvent {
                t: rec.t,
                funds: rec.insolvent,
            };
            break;
        }
    }
    Ok(out)
}
