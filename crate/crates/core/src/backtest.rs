//! Signal execution, transaction costs and performance metrics.
//!
//! Execution is instant at the signal bar's close with a fixed notional per
//! trade. Yields are fractions of that notional and are summed without
//! compounding, so the cumulated yield curve is indexed by trade ordinal.

use std::io::{Read, Write};

use statrs::function::beta::beta_reg;

use crate::detectors::{run_detector, Action, Direction, Signal, StrategyConfig};
use crate::error::{Error, Result};
use crate::marketdata::PriceSeries;
use crate::numfmt::sig;
use crate::regression::ols;

/// Per-trade costs in pips, and the account convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    /// Charged once per round trip.
    pub spread_pips: f64,
    pub swap_long_pips_per_night: f64,
    pub swap_short_pips_per_night: f64,
    pub pip: f64,
    /// Position size in account currency.
    pub notional: f64,
    pub bars_per_day: usize,
}

impl Default for CostModel {
    /// GBPUSD four-hour costs: 1.8 pip spread, 0.38/0.11 pip swaps, $100k.
    fn default() -> Self {
        Self {
            spread_pips: 1.8,
            swap_long_pips_per_night: 0.38,
            swap_short_pips_per_night: 0.11,
            pip: 0.0001,
            notional: 100_000.0,
            bars_per_day: 6,
        }
    }
}

impl CostModel {
    pub fn zero() -> Self {
        Self {
            spread_pips: 0.0,
            swap_long_pips_per_night: 0.0,
            swap_short_pips_per_night: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spread_pips >= 0.0 && self.spread_pips.is_finite()) {
            return Err(Error::param(format!(
                "spread must be non-negative, got {}",
                self.spread_pips
            )));
        }
        if !(self.pip > 0.0 && self.pip.is_finite()) {
            return Err(Error::param(format!(
                "pip must be positive, got {}",
                self.pip
            )));
        }
        if !(self.notional > 0.0 && self.notional.is_finite()) {
            return Err(Error::param(format!(
                "notional must be positive, got {}",
                self.notional
            )));
        }
        if self.bars_per_day == 0 {
            return Err(Error::param("bars per day must be positive"));
        }
        if !self.swap_long_pips_per_night.is_finite() || !self.swap_short_pips_per_night.is_finite()
        {
            return Err(Error::param("swap rates must be finite"));
        }
        Ok(())
    }

    /// Account-currency value of one pip on the notional (USD-quoted pair).
    pub fn pip_value(&self) -> f64 {
        self.notional * self.pip
    }

    pub fn swap_pips(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Long => self.swap_long_pips_per_night,
            Direction::Short => self.swap_short_pips_per_night,
        }
    }
}

/// One round trip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trade {
    pub direction: Direction,
    pub entry_index: usize,
    pub exit_index: usize,
    pub entry_ts: i64,
    pub exit_ts: i64,
    pub entry_price: f64,
    pub exit_price: f64,
    pub nights: u64,
    pub pnl_pips: f64,
    pub yield_fraction: f64,
    pub forced: bool,
}

/// Builds one trade at the given bars with the cost arithmetic applied.
pub fn price_trade(
    series: &PriceSeries,
    direction: Direction,
    entry_index: usize,
    exit_index: usize,
    forced: bool,
    costs: &CostModel,
) -> Trade {
    let entry_price = series.closes()[entry_index];
    let exit_price = series.closes()[exit_index];
    let nights = ((exit_index - entry_index) / costs.bars_per_day) as u64;
    let pnl_pips = direction.sign() * (exit_price - entry_price) / costs.pip
        - costs.spread_pips
        - nights as f64 * costs.swap_pips(direction);
    Trade {
        direction,
        entry_index,
        exit_index,
        entry_ts: series.timestamps()[entry_index],
        exit_ts: series.timestamps()[exit_index],
        entry_price,
        exit_price,
        nights,
        pnl_pips,
        yield_fraction: pnl_pips * costs.pip_value() / costs.notional,
        forced,
    }
}

/// Pairs alternating Open/Close signals into priced trades.
///
/// A forced close on the very bar its position opened yields no trade: the
/// position was never held.
pub fn execute(series: &PriceSeries, signals: &[Signal], costs: &CostModel) -> Result<Vec<Trade>> {
    costs.validate()?;
    if !signals.len().is_multiple_of(2) {
        return Err(Error::InvalidSignals(format!(
            "{} signals cannot pair into round trips",
            signals.len()
        )));
    }
    let mut trades = Vec::with_capacity(signals.len() / 2);
    let mut last_exit = 0;
    for (k, pair) in signals.chunks_exact(2).enumerate() {
        let (open, close) = (&pair[0], &pair[1]);
        if open.action != Action::Open || close.action != Action::Close {
            return Err(Error::InvalidSignals(format!(
                "signals {} and {} are not an Open/Close pair",
                2 * k,
                2 * k + 1
            )));
        }
        if open.direction != close.direction {
            return Err(Error::InvalidSignals(format!(
                "close at bar {} does not match the {} position opened at bar {}",
                close.index, open.direction, open.index
            )));
        }
        if close.index >= series.len() {
            return Err(Error::InvalidSignals(format!(
                "bar {} outside series of {} bars",
                close.index,
                series.len()
            )));
        }
        if open.index < last_exit || close.index < open.index {
            return Err(Error::InvalidSignals(format!(
                "signals out of order at bars {} and {}",
                open.index, close.index
            )));
        }
        last_exit = close.index;
        if close.index == open.index {
            if close.forced {
                continue;
            }
            return Err(Error::InvalidSignals(format!(
                "position opened and closed on bar {}",
                open.index
            )));
        }
        trades.push(price_trade(
            series,
            open.direction,
            open.index,
            close.index,
            close.forced,
            costs,
        ));
    }
    Ok(trades)
}

/// Running sum of per-trade yields.
pub fn yield_curve(trades: &[Trade]) -> Vec<f64> {
    trades
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t.yield_fraction;
            Some(*acc)
        })
        .collect()
}

/// Largest fall from a running peak; the peak starts at zero (initial equity).
pub fn max_drawdown(curve: &[f64]) -> f64 {
    let mut peak: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for &v in curve {
        peak = peak.max(v);
        worst = worst.max(peak - v);
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calmar {
    /// Final yield over maximum drawdown; `+inf` when a gain had no drawdown.
    pub ratio: f64,
    pub annualized_yield: f64,
}

/// Final cumulated yield divided by maximum drawdown.
///
/// With zero drawdown the ratio is `f64::INFINITY` for a positive yield and 0
/// for a flat one.
pub fn calmar(final_yield: f64, max_dd: f64, years: f64) -> Result<Calmar> {
    if years.is_nan() || years <= 0.0 {
        return Err(Error::param(format!("years must be positive, got {years}")));
    }
    if max_dd < 0.0 {
        return Err(Error::param(format!(
            "drawdown must be non-negative, got {max_dd}"
        )));
    }
    let ratio = if max_dd > 0.0 {
        final_yield / max_dd
    } else if final_yield > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(Calmar {
        ratio,
        annualized_yield: final_yield / years,
    })
}

/// OLS of the curve against trade ordinals `1..=n`: `(slope, R²)`.
pub fn regression_r2(curve: &[f64]) -> Result<(f64, f64)> {
    if curve.len() < 3 {
        return Err(Error::TooFewPoints {
            required: 3,
            got: curve.len(),
        });
    }
    let ordinals: Vec<f64> = (1..=curve.len()).map(|k| k as f64).collect();
    let fit = ols(&ordinals, curve)?;
    Ok((fit.slope, fit.r_squared))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherTest {
    /// `R²·(n-2)/(1-R²)`.
    pub f_statistic: f64,
    /// Upper tail of `F(1, n-2)` at `f_statistic`.
    pub p_value: f64,
}

/// Significance of a simple-regression R² over `n` points.
pub fn fisher_significance(r_squared: f64, n: usize) -> Result<FisherTest> {
    if n < 3 {
        return Err(Error::TooFewPoints {
            required: 3,
            got: n,
        });
    }
    if !(0.0..=1.0).contains(&r_squared) {
        return Err(Error::param(format!(
            "R² must lie in [0, 1], got {r_squared}"
        )));
    }
    if r_squared == 1.0 {
        return Ok(FisherTest {
            f_statistic: f64::INFINITY,
            p_value: 0.0,
        });
    }
    let dof = (n - 2) as f64;
    let f_statistic = r_squared * dof / (1.0 - r_squared);
    // P(F > f) with x = d2 / (d2 + d1·f) = 1 - R²
    let p_value = beta_reg(dof / 2.0, 0.5, 1.0 - r_squared).clamp(0.0, 1.0);
    Ok(FisherTest {
        f_statistic,
        p_value,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport {
    pub trades: Vec<Trade>,
    pub yield_curve: Vec<f64>,
    pub final_yield: f64,
    pub max_drawdown: f64,
    pub calmar: f64,
    pub annualized_yield: f64,
    /// Regression statistics need at least three trades.
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    pub fisher_p: Option<f64>,
}

impl BacktestReport {
    /// Computes every metric from a trade list spanning `years`.
    pub fn from_trades(trades: Vec<Trade>, years: f64) -> Result<Self> {
        let curve = yield_curve(&trades);
        let final_yield = curve.last().copied().unwrap_or(0.0);
        let max_dd = max_drawdown(&curve);
        let ca = calmar(final_yield, max_dd, years)?;
        let (slope, r_squared, fisher_p) = if curve.len() >= 3 {
            let (slope, r2) = regression_r2(&curve)?;
            let fisher = fisher_significance(r2, curve.len())?;
            (Some(slope), Some(r2), Some(fisher.p_value))
        } else {
            (None, None, None)
        };
        Ok(Self {
            trades,
            yield_curve: curve,
            final_yield,
            max_drawdown: max_dd,
            calmar: ca.ratio,
            annualized_yield: ca.annualized_yield,
            slope,
            r_squared,
            fisher_p,
        })
    }

    pub fn n_trades(&self) -> usize {
        self.trades.len()
    }

    /// `key = value` lines in a fixed order; missing statistics print `na`.
    pub fn summary_lines(&self) -> Vec<(String, String)> {
        let opt = |x: Option<f64>| x.map(sig).unwrap_or_else(|| "na".to_string());
        vec![
            ("final_yield".into(), sig(self.final_yield)),
            ("max_drawdown".into(), sig(self.max_drawdown)),
            ("calmar".into(), sig(self.calmar)),
            ("annualized_yield".into(), sig(self.annualized_yield)),
            ("r_squared".into(), opt(self.r_squared)),
            ("fisher_p".into(), opt(self.fisher_p)),
            ("n_trades".into(), self.n_trades().to_string()),
        ]
    }

    pub fn write_summary<W: Write>(&self, mut writer: W) -> Result<()> {
        for (k, v) in self.summary_lines() {
            writeln!(writer, "{k} = {v}").map_err(csv::Error::from)?;
        }
        Ok(())
    }

    /// `trade_index,cum_yield` with 1-based trade ordinals.
    pub fn write_yield_curve_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["trade_index", "cum_yield"])?;
        for (k, y) in self.yield_curve.iter().enumerate() {
            out.write_record([(k + 1).to_string(), sig(*y)])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Wall-clock span used for annualisation, falling back to bar count × bar length.
pub fn series_years(series: &PriceSeries) -> f64 {
    let span = series.span_years();
    if span > 0.0 {
        span
    } else {
        (series.len().max(1) as f64 * series.bar_seconds() as f64) / (365.25 * 86_400.0)
    }
}

/// Detector, execution and metrics in one pass.
pub fn run_backtest(
    series: &PriceSeries,
    cfg: &StrategyConfig,
    costs: &CostModel,
) -> Result<BacktestReport> {
    let signals = run_detector(series, cfg)?;
    let trades = execute(series, &signals, costs)?;
    BacktestReport::from_trades(trades, series_years(series))
}

const TRADE_HEADER: [&str; 10] = [
    "k",
    "entry_ts",
    "exit_ts",
    "direction",
    "entry_price",
    "exit_price",
    "nights",
    "pnl_pips",
    "yield_fraction",
    "forced",
];

/// `k,entry_ts,exit_ts,direction,entry_price,exit_price,nights,pnl_pips,yield_fraction,forced`.
pub fn write_trades_csv<W: Write>(trades: &[Trade], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(TRADE_HEADER)?;
    for (k, t) in trades.iter().enumerate() {
        out.write_record([
            (k + 1).to_string(),
            t.entry_ts.to_string(),
            t.exit_ts.to_string(),
            t.direction.to_string(),
            sig(t.entry_price),
            sig(t.exit_price),
            t.nights.to_string(),
            sig(t.pnl_pips),
            sig(t.yield_fraction),
            t.forced.to_string(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One row of an exported trade file.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeRecord {
    pub entry_ts: i64,
    pub exit_ts: i64,
    pub direction: Direction,
    pub entry_price: f64,
    pub exit_price: f64,
    pub nights: u64,
    pub pnl_pips: f64,
    pub yield_fraction: f64,
    pub forced: bool,
}

pub fn read_trades_csv<R: Read>(reader: R) -> Result<Vec<TradeRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bad = |what: &str| Error::MalformedRow {
            line,
            message: format!("bad {what}"),
        };
        let get = |i: usize| record.get(i).ok_or_else(|| bad(TRADE_HEADER[i]));
        let num = |i: usize| -> Result<f64> { get(i)?.parse().map_err(|_| bad(TRADE_HEADER[i])) };
        let int = |i: usize| -> Result<i64> { get(i)?.parse().map_err(|_| bad(TRADE_HEADER[i])) };
        out.push(TradeRecord {
            entry_ts: int(1)?,
            exit_ts: int(2)?,
            direction: get(3)?.parse().map_err(|_| bad("direction"))?,
            entry_price: num(4)?,
            exit_price: num(5)?,
            nights: get(6)?.parse().map_err(|_| bad("nights"))?,
            pnl_pips: num(7)?,
            yield_fraction: num(8)?,
            forced: get(9)?.parse().map_err(|_| bad("forced"))?,
        });
    }
    Ok(out)
}
