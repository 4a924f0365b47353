//! Forward-drift valuation of American options.
//!
//! The option value is written as the current gain plus a functional of a
//! forward-drift curve `f_t(u)`, either additively
//! (`V_t = G_t + ∫_t^T f_t(u) du`) or multiplicatively
//! (`V_t = G_t · exp(-∫_t^T f_t(u) du)`). The crate provides both models,
//! their no-arbitrage drift restrictions and spot-consistency conditions,
//! Monte Carlo harnesses for the martingale property, and independent
//! classical pricers (CRR tree, Black–Scholes) used as oracles.
//!
//! Module map:
//! - [`numerics`]: normal CDF, adaptive Simpson, bracketing roots, GBM paths.
//! - [`gain`]: market parameters and gain processes (put, power payoff).
//! - [`additive`]: the additive model and the put closed form.
//! - [`multiplicative`]: the multiplicative model and the Gaussian power example.
//! - [`oracles`]: CRR, Black–Scholes, exact discrete decomposition, comparison report.
//! - [`verify`]: the verification suites behind `hjm verify`.
//! - [`format`]: 12-significant-digit number rendering and CSV helpers.

// `!(x > 0.0)` guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod additive;
pub mod curve;
pub mod error;
pub mod format;
pub mod gain;
pub mod multiplicative;
pub mod numerics;
pub mod oracles;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use gain::{GainMode, GainProcess, MarketParams};
pub use numerics::{PathSet, TimeGrid};
