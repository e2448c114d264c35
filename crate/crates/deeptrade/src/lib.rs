//! Walk-forward price prediction and trading backtests.
//!
//! A deep LSTM network (trained from scratch each trading day on a rolling
//! window) predicts next-day prices; an allocation policy bins predicted
//! returns by deciles of their own distribution and buys only in bins that
//! have been empirically profitable; a simulator executes the strategy and
//! an analytics suite scores both forecasts and trading performance against
//! ARIMA, naive-persistence, up-down and buy-and-hold baselines.
//!
//! See the `examples/` directory for one runnable program per capability,
//! and the `deeptrade` binary for the `ingest` / `backtest` / `gridsearch` /
//! `compare` / `plot` subcommands.

pub mod analytics;
pub mod baselines;
pub mod cli;
pub mod error;
pub mod gridsearch;
pub mod lstm;
pub mod market_data;
pub mod plot;
pub mod policy;
pub mod predictor;
pub mod simulator;
pub mod util;

pub use error::{Error, Result};
