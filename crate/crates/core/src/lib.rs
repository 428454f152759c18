//! Regime-transition detection for uniform close-price series.
//!
//! Two transition precursors are implemented as trading-signal state machines:
//!
//! - **Stability-loss delay** ([`Variant::Sld`]): a slow transition announced by a
//!   gently growing diffusion coefficient while the price still sits inside its
//!   mean-reversion band.
//! - **Precatastrophic compression** ([`Variant::Pc`]): a fast transition announced
//!   by a shrinking mean-square displacement followed by a break out of the band.
//!
//! The crate is organised bottom-up:
//!
//! - [`marketdata`]: validated [`PriceSeries`] ingestion and windowing
//! - [`rollingstats`]: per-bar window statistics consumed by the detectors
//! - [`detectors`]: the two entry/exit state machines
//! - [`backtest`]: execution with spread/swap costs and performance metrics
//! - [`synth`]: seeded synthetic series (fBm, mean reversion, planted transitions)
//! - [`optimize`]: in-sample grid search with out-of-sample continuation

pub mod backtest;
pub mod detectors;
mod error;
pub mod marketdata;
pub mod numfmt;
pub mod optimize;
pub mod regression;
pub mod rollingstats;
pub mod synth;

pub use backtest::{BacktestReport, CostModel, Trade};
pub use detectors::{Action, Direction, Signal, StrategyConfig, Variant};
pub use error::{Error, Result};
pub use marketdata::{PriceSeries, Window};
pub use rollingstats::WindowDiagnostics;
