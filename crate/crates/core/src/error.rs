use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of a function (non-positive price, etc.).
    #[error("domain error: {0}")]
    Domain(&'static str),

    /// Gordon growth valuation requires the discount rate to exceed the growth rate.
    #[error("valuation does not converge: discount rate {k} <= growth rate {g}")]
    NonConvergent { k: f64, g: f64 },

    #[error("insufficient history: need at least {need} observations, got {got}")]
    InsufficientHistory { need: usize, got: usize },

    #[error("degenerate variance: {0}")]
    DegenerateVariance(&'static str),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("wealth vector leaves the simplex interior: {0}")]
    SimplexBoundary(&'static str),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("market clearing failed at step {t}: no finite positive price")]
    ClearingFailed { t: usize },

    #[error("funds {funds:?} insolvent at step {t}")]
    Insolvency { funds: Vec<usize>, t: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
