//! Analytics over simulated runs.

pub mod community;
pub mod divergence;
pub mod regression;
pub mod simplex;
pub mod stats;
