//! Market ecology simulation: an agent-based stock market with noise traders,
//! value investors and trend followers, plus the analytics used to study it as an
//! ecosystem of interacting strategies.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod accounting;
pub mod clearing;
pub mod ecology;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod params;
pub mod processes;
pub mod rng;
pub mod strategies;
pub mod valuation;

pub use accounting::Fund;
pub use ecology::simplex::WealthVector;
pub use engine::{run, HistoryMode, RunConfig, RunMode, RunOutput, SupplyRule, WealthTarget};
pub use error::{Error, Result};
pub use params::{MarketParams, STEPS_PER_YEAR};
pub use strategies::StrategyKind;
