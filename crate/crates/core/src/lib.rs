//! Burkholder potentials for online learning.
//!
//! A learner keeps an additive statistic ζ of its past rounds and predicts
//! so that a potential U(ζ) never increases. When U dominates a bound
//! function V, the final value V(ζ_n) ≤ U(0) ≤ 0 certifies a regret bound
//! on the sequence actually played.

pub mod error;
pub mod harness;
pub mod losses;
pub mod potentials;
pub mod stat_core;
pub mod symlin;
pub mod verify;

pub use error::{Error, Result};
