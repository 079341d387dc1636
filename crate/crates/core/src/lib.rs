//! Rank-order tournaments with loss-averse agents: rank statistics of the
//! noise law, marginal benefits of effort, optimal prize schedules and a
//! seeded Monte Carlo oracle.

pub mod error;
pub mod figure;
pub mod incentives;
pub mod noise;
pub mod prizes;
pub mod quadrature;
pub mod rank_stats;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
