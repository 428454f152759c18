//! Transition-pattern state machines.
//!
//! Both variants open a position when three entry conditions hold on a bar
//! close and flatten it when the exit ("new equilibrium") conditions hold.
//!
//! Stability-loss delay ([`Variant::Sld`]) enters on:
//! 1. short memory: lagged-window ACF below `acf_star`;
//! 2. slow diffusion growth: `0 < D_i - D_{i-1} < θ·D_i`;
//! 3. price still inside the band: `|p_i - μ_i| < F·σ_i`;
//!
//! and exits once price crosses back through the mean with `D_i - D_{i-1} < 0`.
//!
//! Precatastrophic compression ([`Variant::Pc`]) enters on:
//! 1. short memory, as above;
//! 2. compression on the previous bar: MSD slope `χ < 0` at `i - 1`;
//! 3. breakout at `i`: `|p_i - μ_i| > F·σ_i`;
//!
//! and exits on mean crossing with `χ < 0` and short memory at `i`.
//!
//! The position direction follows the side of the mean the price sits on.
//! A price exactly at the mean never opens a position.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::marketdata::PriceSeries;
use crate::numfmt::{sig, sig_opt};
use crate::rollingstats::{
    acf_lagged, diffusion, diffusion_trend, msd_curve, msd_slope, window_mean_std,
    DiagnosticsTable, WindowDiagnostics,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// Stability-loss delay (slow transition).
    Sld,
    /// Precatastrophic compression (fast transition).
    Pc,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Sld => "sld",
            Variant::Pc => "pc",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sld" => Ok(Variant::Sld),
            "pc" => Ok(Variant::Pc),
            other => Err(Error::param(format!(
                "unknown variant `{other}` (expected sld or pc)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Long,
    Short,
}

impl Direction {
    /// +1 for long, -1 for short.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Long => 1.0,
            Direction::Short => -1.0,
        }
    }

    fn of_deviation(price: f64, mu: f64) -> Option<Self> {
        if price > mu {
            Some(Direction::Long)
        } else if price < mu {
            Some(Direction::Short)
        } else {
            None
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Long => "long",
            Direction::Short => "short",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "long" => Ok(Direction::Long),
            "short" => Ok(Direction::Short),
            other => Err(Error::param(format!("unknown direction `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Open,
    Close,
}

/// Detector parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyConfig {
    pub variant: Variant,
    /// Window length in bars.
    pub n: usize,
    /// Band half-width in units of σ.
    pub band: f64,
    /// Diffusion growth ceiling as a fraction of `D_i`; SLD only.
    pub theta: Option<f64>,
    pub acf_star: f64,
}

impl StrategyConfig {
    pub fn sld(n: usize, band: f64, theta: f64, acf_star: f64) -> Self {
        Self {
            variant: Variant::Sld,
            n,
            band,
            theta: Some(theta),
            acf_star,
        }
    }

    pub fn pc(n: usize, band: f64, acf_star: f64) -> Self {
        Self {
            variant: Variant::Pc,
            n,
            band,
            theta: None,
            acf_star,
        }
    }

    /// Reference GBPUSD four-hour optimum for each variant.
    pub fn reference(variant: Variant) -> Self {
        match variant {
            Variant::Sld => Self::sld(5, 1.4, 0.1, 0.7),
            Variant::Pc => Self::pc(5, 1.3, 0.7),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::param(format!(
                "N must be at least 2, got {}",
                self.n
            )));
        }
        if !(self.band > 0.0 && self.band.is_finite()) {
            return Err(Error::param(format!(
                "F must be positive, got {}",
                self.band
            )));
        }
        if !(self.acf_star > 0.0 && self.acf_star < 1.0) {
            return Err(Error::param(format!(
                "ACF* must lie in (0, 1), got {}",
                self.acf_star
            )));
        }
        match (self.variant, self.theta) {
            (Variant::Sld, Some(t)) if t > 0.0 && t < 1.0 => Ok(()),
            (Variant::Sld, Some(t)) => {
                Err(Error::param(format!("theta must lie in (0, 1), got {t}")))
            }
            (Variant::Sld, None) => Err(Error::param("theta is required for sld")),
            (Variant::Pc, _) => Ok(()),
        }
    }

    /// First bar at which the entry rule can be evaluated.
    pub fn first_valid_bar(&self) -> usize {
        match self.variant {
            Variant::Sld => (2 * self.n).max(self.n + 1),
            Variant::Pc => 3 * self.n + 1,
        }
    }

    fn expect(&self, variant: Variant) -> Result<()> {
        self.validate()?;
        if self.variant != variant {
            return Err(Error::param(format!(
                "{variant} check called with a {} config",
                self.variant
            )));
        }
        Ok(())
    }

    fn theta_value(&self) -> f64 {
        self.theta.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Signal {
    pub index: usize,
    pub action: Action,
    /// Direction opened, or of the position being closed.
    pub direction: Direction,
    /// Close emitted because the data ended.
    pub forced: bool,
    pub diagnostics: WindowDiagnostics,
}

/// Position held during one detector scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorState {
    Flat,
    Positioned {
        direction: Direction,
        entry_index: usize,
    },
}

fn short_memory(acf: Option<f64>, acf_star: f64) -> bool {
    matches!(acf, Some(a) if a < acf_star)
}

fn reverted(direction: Direction, price: f64, mu: f64) -> bool {
    match direction {
        Direction::Long => price < mu,
        Direction::Short => price > mu,
    }
}

fn sld_entry_rule(
    cfg: &StrategyConfig,
    price: f64,
    mu: f64,
    sigma: f64,
    acf: Option<f64>,
    d_now: f64,
    d_prev: f64,
) -> Option<Direction> {
    let growth = d_now - d_prev;
    let slow_growth = 0.0 < growth && growth < cfg.theta_value() * d_now;
    let in_band = (price - mu).abs() < cfg.band * sigma;
    if short_memory(acf, cfg.acf_star) && slow_growth && in_band {
        Direction::of_deviation(price, mu)
    } else {
        None
    }
}

fn sld_exit_rule(direction: Direction, price: f64, mu: f64, growth: f64) -> bool {
    reverted(direction, price, mu) && growth < 0.0
}

fn pc_entry_rule(
    cfg: &StrategyConfig,
    price: f64,
    mu: f64,
    sigma: f64,
    acf: Option<f64>,
    chi_prev: f64,
) -> Option<Direction> {
    let breakout = (price - mu).abs() > cfg.band * sigma;
    if short_memory(acf, cfg.acf_star) && chi_prev < 0.0 && breakout {
        Direction::of_deviation(price, mu)
    } else {
        None
    }
}

fn pc_exit_rule(
    cfg: &StrategyConfig,
    direction: Direction,
    price: f64,
    mu: f64,
    acf: Option<f64>,
    chi: f64,
) -> bool {
    reverted(direction, price, mu) && chi < 0.0 && short_memory(acf, cfg.acf_star)
}

fn band_at(prices: &[f64], i: usize, n: usize) -> Result<(f64, f64)> {
    if i >= prices.len() {
        return Err(Error::param(format!(
            "bar {i} outside series of {} bars",
            prices.len()
        )));
    }
    if i + 1 < n {
        return Err(Error::InsufficientHistory {
            index: i,
            required: n - 1,
        });
    }
    window_mean_std(&prices[i + 1 - n..=i])
}

fn require(i: usize, required: usize) -> Result<()> {
    if i < required {
        return Err(Error::InsufficientHistory { index: i, required });
    }
    Ok(())
}

pub fn sld_entry_check(
    prices: &[f64],
    i: usize,
    cfg: &StrategyConfig,
) -> Result<Option<Direction>> {
    cfg.expect(Variant::Sld)?;
    require(i, cfg.first_valid_bar())?;
    let (mu, sigma) = band_at(prices, i, cfg.n)?;
    let acf = acf_lagged(prices, i, cfg.n)?;
    let d_now = diffusion(prices, i, cfg.n)?;
    let d_prev = diffusion(prices, i - 1, cfg.n)?;
    Ok(sld_entry_rule(
        cfg, prices[i], mu, sigma, acf, d_now, d_prev,
    ))
}

pub fn sld_exit_check(
    prices: &[f64],
    i: usize,
    cfg: &StrategyConfig,
    position: Direction,
) -> Result<bool> {
    cfg.expect(Variant::Sld)?;
    require(i, cfg.n + 1)?;
    let (mu, _) = band_at(prices, i, cfg.n)?;
    let (growth, _) = diffusion_trend(prices, i, cfg.n)?;
    Ok(sld_exit_rule(position, prices[i], mu, growth))
}

pub fn pc_entry_check(prices: &[f64], i: usize, cfg: &StrategyConfig) -> Result<Option<Direction>> {
    cfg.expect(Variant::Pc)?;
    require(i, cfg.first_valid_bar())?;
    let (mu, sigma) = band_at(prices, i, cfg.n)?;
    let acf = acf_lagged(prices, i, cfg.n)?;
    let chi_prev = msd_slope(&msd_curve(prices, i - 1, cfg.n)?)?;
    Ok(pc_entry_rule(cfg, prices[i], mu, sigma, acf, chi_prev))
}

pub fn pc_exit_check(
    prices: &[f64],
    i: usize,
    cfg: &StrategyConfig,
    position: Direction,
) -> Result<bool> {
    cfg.expect(Variant::Pc)?;
    require(i, 3 * cfg.n)?;
    let (mu, _) = band_at(prices, i, cfg.n)?;
    let acf = acf_lagged(prices, i, cfg.n)?;
    let chi = msd_slope(&msd_curve(prices, i, cfg.n)?)?;
    Ok(pc_exit_rule(cfg, position, prices[i], mu, acf, chi))
}

/// Scans the whole series and returns the alternating Open/Close signal list.
///
/// A position still open on the last bar is closed there with `forced` set.
pub fn run_detector(series: &PriceSeries, cfg: &StrategyConfig) -> Result<Vec<Signal>> {
    cfg.validate()?;
    let prices = series.closes();
    if prices.len() <= cfg.first_valid_bar() {
        return Err(Error::TooFewPoints {
            required: cfg.first_valid_bar() + 1,
            got: prices.len(),
        });
    }
    let table = DiagnosticsTable::compute(prices, cfg.n)?;
    run_with_table(prices, &table, cfg)
}

/// [`run_detector`] on precomputed statistics; the table's window must equal `cfg.n`.
#[allow(clippy::needless_range_loop)]
pub fn run_with_table(
    prices: &[f64],
    table: &DiagnosticsTable,
    cfg: &StrategyConfig,
) -> Result<Vec<Signal>> {
    cfg.validate()?;
    if table.window() != cfg.n || table.len() != prices.len() {
        return Err(Error::param(format!(
            "diagnostics table (N={}, {} bars) does not match config N={} on {} bars",
            table.window(),
            table.len(),
            cfg.n,
            prices.len()
        )));
    }
    let snapshot = |i: usize| {
        table.diagnostics(i).ok_or(Error::InsufficientHistory {
            index: i,
            required: 2 * cfg.n - 1,
        })
    };
    let mut signals = Vec::new();
    let mut state = DetectorState::Flat;
    for i in cfg.first_valid_bar()..prices.len() {
        let d = snapshot(i)?;
        let price = prices[i];
        match state {
            DetectorState::Flat => {
                let entry = match cfg.variant {
                    Variant::Sld => table.diffusion(i - 1).and_then(|d_prev| {
                        sld_entry_rule(cfg, price, d.mu, d.sigma, d.acf, d.diffusion, d_prev)
                    }),
                    Variant::Pc => table.chi(i - 1).and_then(|chi_prev| {
                        pc_entry_rule(cfg, price, d.mu, d.sigma, d.acf, chi_prev)
                    }),
                };
                if let Some(direction) = entry {
                    signals.push(Signal {
                        index: i,
                        action: Action::Open,
                        direction,
                        forced: false,
                        diagnostics: d,
                    });
                    state = DetectorState::Positioned {
                        direction,
                        entry_index: i,
                    };
                }
            }
            DetectorState::Positioned { direction, .. } => {
                let exit = match cfg.variant {
                    Variant::Sld => table.diffusion(i - 1).is_some_and(|d_prev| {
                        sld_exit_rule(direction, price, d.mu, d.diffusion - d_prev)
                    }),
                    Variant::Pc => d
                        .chi
                        .is_some_and(|chi| pc_exit_rule(cfg, direction, price, d.mu, d.acf, chi)),
                };
                if exit {
                    signals.push(Signal {
                        index: i,
                        action: Action::Close,
                        direction,
                        forced: false,
                        diagnostics: d,
                    });
                    state = DetectorState::Flat;
                }
            }
        }
    }
    if let DetectorState::Positioned { direction, .. } = state {
        let last = prices.len() - 1;
        signals.push(Signal {
            index: last,
            action: Action::Close,
            direction,
            forced: true,
            diagnostics: snapshot(last)?,
        });
    }
    Ok(signals)
}

/// `index,timestamp,action,direction,acf,diffusion,chi,mu,sigma`.
///
/// Action is `open`, `close`, or `force_close` for the end-of-data close.
pub fn write_signals_csv<W: Write>(
    series: &PriceSeries,
    signals: &[Signal],
    writer: W,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "index",
        "timestamp",
        "action",
        "direction",
        "acf",
        "diffusion",
        "chi",
        "mu",
        "sigma",
    ])?;
    for s in signals {
        let action = match (s.action, s.forced) {
            (Action::Open, _) => "open",
            (Action::Close, false) => "close",
            (Action::Close, true) => "force_close",
        };
        let d = &s.diagnostics;
        out.write_record([
            s.index.to_string(),
            series.timestamps()[s.index].to_string(),
            action.to_string(),
            s.direction.to_string(),
            sig_opt(d.acf),
            sig(d.diffusion),
            sig_opt(d.chi),
            sig(d.mu),
            sig(d.sigma),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
