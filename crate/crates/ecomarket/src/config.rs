//! Flat key-value experiment configuration.
//!
//! A config file is TOML with top-level keys only. Market parameters use the
//! usual symbols (`r`, `g`, `k`, `sigma`, ...); everything is annual unless the
//! key says otherwise. Missing keys take their defaults, unknown keys are errors.

use std::fmt::Write as _;
use std::path::Path;

use ecomarket_core::ecology::community::FoodWebNorm;
use ecomarket_core::engine::{
    HistoryMode, KellySpec, RunConfig, RunMode, SupplyRule, WealthTarget,
};
use ecomarket_core::params::{reversion_for_half_life, MarketParams, STEPS_PER_YEAR};
use ecomarket_core::WealthVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Constant,
    Reinvest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Supply {
    HalfWealth,
    LeverageWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    TrackValue,
    Nominal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum History {
    Sampled,
    Simulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    Uniform,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    Raw,
    RowSum,
    OwnReturn,
}

/// Which parameter a convergence experiment varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergeParam {
    /// Reinvestment rate.
    F,
    /// Noise-trader volatility.
    Gamma,
    /// Dividend volatility.
    Sigma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    // run
    pub seed: u64,
    pub years: usize,
    pub warmup_years: usize,
    pub prehistory_years: usize,
    pub history: History,
    pub mode: Mode,
    pub f: f64,
    pub w_nt: f64,
    pub w_vi: f64,
    pub w_tf: f64,
    pub total_wealth: f64,
    pub supply: Supply,
    pub wealth_target: Target,
    pub halt_on_insolvency: bool,

    // market
    pub r: f64,
    pub g: f64,
    pub k: f64,
    pub sigma: f64,
    pub omega: f64,
    pub gamma: f64,
    pub noise_half_life_years: f64,
    pub lambda_nt: f64,
    pub lambda_vi: f64,
    pub lambda_tf: f64,
    pub c_nt: f64,
    pub c_vi: f64,
    pub c_tf: f64,
    pub x_floor: f64,
    pub initial_price: f64,

    // ensembles
    pub seeds: usize,
    pub runs: usize,
    pub resolution: usize,
    pub margin: f64,
    pub sweep_trophic: bool,
    pub h: f64,
    pub min_t: f64,
    pub food_web_norm: Norm,
    pub init: Init,
    pub sample_every: usize,
    pub vol_window: usize,
    pub converge_param: ConvergeParam,
    pub converge_values: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub kelly_wealth: f64,
    pub kelly_lambda: f64,
    pub kelly_half_life_years: f64,
    pub acf_lags: usize,
}

impl Default for Config {
    fn default() -> Self {
        let p = MarketParams::default();
        Self {
            seed: 0,
            years: 20,
            warmup_years: 1,
            prehistory_years: 100_000,
            history: History::Sampled,
            mode: Mode::Constant,
            f: 1.0,
            w_nt: 0.43,
            w_vi: 0.34,
            w_tf: 0.23,
            total_wealth: ecomarket_core::engine::DEFAULT_TOTAL_WEALTH,
            supply: Supply::HalfWealth,
            wealth_target: Target::TrackValue,
            halt_on_insolvency: true,
            r: p.r,
            g: p.g,
            k: p.k,
            sigma: p.sigma,
            omega: p.omega,
            gamma: p.sigma_nt,
            noise_half_life_years: 6.0,
            lambda_nt: p.lambda[0],
            lambda_vi: p.lambda[1],
            lambda_tf: p.lambda[2],
            c_nt: p.c[0],
            c_vi: p.c[1],
            c_tf: p.c[2],
            x_floor: p.x_floor,
            initial_price: p.initial_price,
            seeds: 5,
            runs: 50,
            resolution: 15,
            margin: 0.02,
            sweep_trophic: false,
            h: 0.02,
            min_t: 0.0,
            food_web_norm: Norm::RowSum,
            init: Init::Uniform,
            sample_every: STEPS_PER_YEAR,
            vol_window: STEPS_PER_YEAR,
            converge_param: ConvergeParam::F,
            converge_values: vec![0.1, 0.3, 1.0, 3.0, 5.0],
            multipliers: vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0],
            kelly_wealth: 1e6,
            kelly_lambda: 8.0,
            kelly_half_life_years: 10.0,
            acf_lags: 20,
        }
    }
}

impl Config {
    /// Parses a config file body and applies `key=value` overrides on top.
    /// Override values are read as TOML values, falling back to bare strings.
    pub fn from_toml_str(body: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = body
            .parse()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        for (key, raw) in overrides {
            let value = parse_value(raw);
            table.insert(key.clone(), value);
        }
        let cfg: Config = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&body, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.years == 0 {
            return bad("years must be at least 1");
        }
        if self.warmup_years > self.years {
            return bad("warmup_years must not exceed years");
        }
        if self.seeds == 0 || self.runs == 0 {
            return bad("seeds and runs must be at least 1");
        }
        if self.resolution < 2 {
            return bad("resolution must be at least 2");
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1");
        }
        if self.vol_window < 2 {
            return bad("vol_window must be at least 2");
        }
        if self.multipliers.is_empty() || self.converge_values.is_empty() {
            return bad("multipliers and converge_values must not be empty");
        }
        self.wealth()?;
        self.run_config()?.validate().map_err(HarnessError::from)
    }

    /// The configured wealth vector.
    pub fn wealth(&self) -> Result<WealthVector> {
        Ok(WealthVector::normalized([self.w_nt, self.w_vi, self.w_tf])?)
    }

    pub fn params(&self) -> MarketParams {
        MarketParams {
            r: self.r,
            g: self.g,
            k: self.k,
            sigma: self.sigma,
            omega: self.omega,
            rho: reversion_for_half_life(self.noise_half_life_years),
            sigma_nt: self.gamma,
            lambda: [self.lambda_nt, self.lambda_vi, self.lambda_tf],
            c: [self.c_nt, self.c_vi, self.c_tf],
            x_floor: self.x_floor,
            initial_price: self.initial_price,
        }
    }

    pub fn kelly(&self, multiplier: f64) -> KellySpec {
        KellySpec {
            wealth: self.kelly_wealth,
            lambda_max: self.kelly_lambda,
            half_life: self.kelly_half_life_years * STEPS_PER_YEAR as f64,
            multiplier,
        }
    }

    pub fn run_mode(&self) -> RunMode {
        match self.mode {
            Mode::Constant => RunMode::ConstantWealth,
            Mode::Reinvest => RunMode::Reinvest { f: self.f },
        }
    }

    /// Single-run configuration at the configured wealth vector.
    pub fn run_config(&self) -> Result<RunConfig> {
        let w = self.wealth()?;
        Ok(RunConfig {
            params: self.params(),
            mode: self.run_mode(),
            endowment: [0.0; 3],
            horizon: self.years * STEPS_PER_YEAR,
            warmup: self.warmup_years * STEPS_PER_YEAR,
            seed: self.seed,
            run_index: 0,
            prehistory: self.prehistory_years.max(1) * STEPS_PER_YEAR,
            history: match self.history {
                History::Sampled => HistoryMode::Sampled,
                History::Simulated => HistoryMode::Simulated,
            },
            supply: match self.supply {
                Supply::HalfWealth => SupplyRule::HalfWealth,
                Supply::LeverageWeighted => SupplyRule::LeverageWeighted,
            },
            wealth_target: match self.wealth_target {
                Target::TrackValue => WealthTarget::TrackValue,
                Target::Nominal => WealthTarget::Nominal,
            },
            kelly: None,
            halt_on_insolvency: self.halt_on_insolvency,
        }
        .with_wealth(w, self.total_wealth))
    }

    pub fn food_web_norm(&self) -> FoodWebNorm {
        match self.food_web_norm {
            Norm::Raw => FoodWebNorm::Raw,
            Norm::RowSum => FoodWebNorm::RowSum,
            Norm::OwnReturn => FoodWebNorm::OwnReturn,
        }
    }

    /// Seeds used by ensemble estimators: `seed, seed + 1, ...`.
    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.seed + i).collect()
    }

    /// Canonical JSON rendering; field order is the struct order.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        let mut out = hex::encode(digest);
        out.truncate(16);
        out
    }

    /// The config as a flat TOML document.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let table = toml::Table::try_from(self).expect("config serialises");
        for (k, v) in &table {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Splits `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s.split_once('=').ok_or_else(|| {
        HarnessError::Config(format!("override `{s}` is not of the form key=value"))
    })?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}
