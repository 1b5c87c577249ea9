//! Utility-indifference prices of European calls under proportional
//! transaction costs, for exponential Levy models (Black-Scholes, Merton
//! jump-diffusion, variance gamma).
//!
//! The log-price follows a recombining multinomial lattice whose one-step
//! law matches the model to second order in `dt`; holdings live on a share
//! grid, and the dynamic program runs in the log of the exponential-utility
//! value function. Closed forms, a PIDE solver and Monte Carlo give
//! independent reference prices.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod error;
pub mod levy;
pub mod market;
pub mod quadrature;
pub mod report;
pub mod dp;
pub mod benchmarks;
pub mod mc;
pub mod config;
pub mod commands;
