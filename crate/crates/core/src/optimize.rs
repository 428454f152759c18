//! Exhaustive in-sample parameter search with out-of-sample continuation.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::backtest::{execute, series_years, BacktestReport, CostModel, Trade};
use crate::detectors::{run_detector, run_with_table, StrategyConfig, Variant};
use crate::error::{Error, Result};
use crate::marketdata::PriceSeries;
use crate::numfmt::sig;
use crate::rollingstats::DiagnosticsTable;

/// Where the in-sample segment ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Split {
    /// Fraction of bars, in `(0, 1)`, that are in-sample.
    BarFraction(f64),
    /// The first `k` trades of each candidate's full run are in-sample.
    TradeCount(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n_values: Vec<usize>,
    pub band_values: Vec<f64>,
    /// Ignored for [`Variant::Pc`].
    pub theta_values: Vec<f64>,
    pub acf_star_values: Vec<f64>,
    pub split: Split,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_values: (3..=15).collect(),
            band_values: (5..=30).map(|k| k as f64 / 10.0).collect(),
            theta_values: vec![0.02, 0.05, 0.1, 0.2, 0.3],
            acf_star_values: vec![0.3, 0.5, 0.7, 0.9],
            split: Split::BarFraction(0.7),
        }
    }
}

impl GridSpec {
    /// A grid holding exactly one configuration.
    pub fn single(cfg: &StrategyConfig, split: Split) -> Self {
        Self {
            n_values: vec![cfg.n],
            band_values: vec![cfg.band],
            theta_values: cfg.theta.into_iter().collect(),
            acf_star_values: vec![cfg.acf_star],
            split,
        }
    }

    /// Every configuration in the grid, validated, deduplicated and in tie-break order.
    pub fn configs(&self, variant: Variant) -> Result<Vec<StrategyConfig>> {
        let empty = |what: &str| Err(Error::EmptyGrid(format!("no {what} values")));
        if self.n_values.is_empty() {
            return empty("N");
        }
        if self.band_values.is_empty() {
            return empty("F");
        }
        if self.acf_star_values.is_empty() {
            return empty("ACF*");
        }
        if variant == Variant::Sld && self.theta_values.is_empty() {
            return empty("theta");
        }
        match self.split {
            Split::BarFraction(f) if !(f > 0.0 && f < 1.0) => {
                return Err(Error::param(format!("split must lie in (0, 1), got {f}")))
            }
            Split::TradeCount(0) => return Err(Error::param("trade-count split must be positive")),
            _ => {}
        }
        let thetas: Vec<Option<f64>> = match variant {
            Variant::Sld => self.theta_values.iter().map(|&t| Some(t)).collect(),
            Variant::Pc => vec![None],
        };
        let mut configs = Vec::new();
        for &n in &self.n_values {
            for &band in &self.band_values {
                for &theta in &thetas {
                    for &acf_star in &self.acf_star_values {
                        let cfg = StrategyConfig {
                            variant,
                            n,
                            band,
                            theta,
                            acf_star,
                        };
                        cfg.validate()?;
                        configs.push(cfg);
                    }
                }
            }
        }
        configs.sort_by(tie_break);
        configs.dedup();
        Ok(configs)
    }
}

/// Smallest N, then F, then θ, then ACF*.
fn tie_break(a: &StrategyConfig, b: &StrategyConfig) -> Ordering {
    a.n.cmp(&b.n)
        .then(a.band.total_cmp(&b.band))
        .then(a.theta.unwrap_or(0.0).total_cmp(&b.theta.unwrap_or(0.0)))
        .then(a.acf_star.total_cmp(&b.acf_star))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderboardEntry {
    pub config: StrategyConfig,
    pub in_sample_yield: f64,
    pub n_trades: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_config: StrategyConfig,
    /// First out-of-sample bar (bar split) or entry bar of the first
    /// out-of-sample trade (trade split; series length if there is none).
    pub split_bar: usize,
    pub in_sample_report: BacktestReport,
    pub out_sample_report: BacktestReport,
    pub full_report: BacktestReport,
    /// Best first; ties ordered by the tie-break rule.
    pub leaderboard: Vec<LeaderboardEntry>,
}

impl OptimizationResult {
    /// `N,F,theta,acf_star,in_sample_yield,n_trades`; theta is empty for PC.
    pub fn write_leaderboard_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["N", "F", "theta", "acf_star", "in_sample_yield", "n_trades"])?;
        for e in &self.leaderboard {
            out.write_record([
                e.config.n.to_string(),
                sig(e.config.band),
                e.config.theta.map(sig).unwrap_or_default(),
                sig(e.config.acf_star),
                sig(e.in_sample_yield),
                e.n_trades.to_string(),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn years_between(series: &PriceSeries, from: usize, to: usize) -> f64 {
    if from + 1 >= to.min(series.len()) {
        return series_years(series);
    }
    let ts = series.timestamps();
    let span = (ts[to.min(series.len()) - 1] - ts[from]) as f64 / (365.25 * 86_400.0);
    if span > 0.0 {
        span
    } else {
        series_years(series)
    }
}

fn run_trades(
    series: &PriceSeries,
    tables: &BTreeMap<usize, DiagnosticsTable>,
    cfg: &StrategyConfig,
    costs: &CostModel,
) -> Result<Vec<Trade>> {
    let signals = run_with_table(series.closes(), &tables[&cfg.n], cfg)?;
    execute(series, &signals, costs)
}

/// Evaluates every grid point in-sample and reports the best one.
///
/// Grid points are evaluated in parallel; the ranking depends only on values,
/// so the result does not depend on grid order.
pub fn grid_search(
    series: &PriceSeries,
    grid: &GridSpec,
    variant: Variant,
    costs: &CostModel,
) -> Result<OptimizationResult> {
    costs.validate()?;
    let configs = grid.configs(variant)?;

    let in_sample_series = match grid.split {
        Split::BarFraction(f) => series.prefix((f * series.len() as f64).floor() as usize),
        Split::TradeCount(_) => series.clone(),
    };
    let configs: Vec<StrategyConfig> = configs
        .into_iter()
        .filter(|c| in_sample_series.len() > c.first_valid_bar())
        .collect();
    if configs.is_empty() {
        return Err(Error::EmptyGrid(format!(
            "no configuration fits the {}-bar in-sample segment",
            in_sample_series.len()
        )));
    }

    let windows: Vec<usize> = {
        let mut w: Vec<usize> = configs.iter().map(|c| c.n).collect();
        w.dedup();
        w
    };
    let tables: BTreeMap<usize, DiagnosticsTable> = windows
        .par_iter()
        .map(|&n| DiagnosticsTable::compute(in_sample_series.closes(), n).map(|t| (n, t)))
        .collect::<Result<_>>()?;

    let evaluated: Vec<(StrategyConfig, Vec<Trade>)> = configs
        .par_iter()
        .map(|cfg| {
            let mut trades = run_trades(&in_sample_series, &tables, cfg, costs)?;
            if let Split::TradeCount(k) = grid.split {
                trades.truncate(k);
            }
            Ok((*cfg, trades))
        })
        .collect::<Result<_>>()?;

    let mut leaderboard: Vec<LeaderboardEntry> = evaluated
        .iter()
        .map(|(config, trades)| LeaderboardEntry {
            config: *config,
            in_sample_yield: trades.iter().map(|t| t.yield_fraction).sum(),
            n_trades: trades.len(),
        })
        .collect();
    leaderboard.sort_by(|a, b| {
        b.in_sample_yield
            .total_cmp(&a.in_sample_yield)
            .then_with(|| tie_break(&a.config, &b.config))
    });
    let best_config = leaderboard[0].config;
    let best_in_sample = evaluated
        .into_iter()
        .find(|(c, _)| *c == best_config)
        .map(|(_, t)| t)
        .expect("best config was evaluated");

    let full_signals = run_detector(series, &best_config)?;
    let full_trades = execute(series, &full_signals, costs)?;
    let split_bar = match grid.split {
        Split::BarFraction(_) => in_sample_series.len(),
        Split::TradeCount(k) => full_trades
            .get(k)
            .map(|t| t.entry_index)
            .unwrap_or(series.len()),
    };
    let out_trades: Vec<Trade> = match grid.split {
        Split::BarFraction(_) => full_trades
            .iter()
            .copied()
            .filter(|t| t.entry_index >= split_bar)
            .collect(),
        Split::TradeCount(k) => full_trades.iter().skip(k).copied().collect(),
    };

    Ok(OptimizationResult {
        best_config,
        split_bar,
        in_sample_report: BacktestReport::from_trades(
            best_in_sample,
            years_between(series, 0, split_bar),
        )?,
        out_sample_report: BacktestReport::from_trades(
            out_trades,
            years_between(series, split_bar, series.len()),
        )?,
        full_report: BacktestReport::from_trades(full_trades, series_years(series))?,
        leaderboard,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_spans_reference_optima() {
        let g = GridSpec::default();
        assert_eq!(g.n_values.len(), 13);
        assert_eq!(g.band_values.len(), 26);
        assert!(g.band_values.contains(&1.4) && g.band_values.contains(&1.3));
        assert!(g.theta_values.contains(&0.1) && g.acf_star_values.contains(&0.7));
        assert_eq!(g.configs(Variant::Sld).unwrap().len(), 13 * 26 * 5 * 4);
        assert_eq!(g.configs(Variant::Pc).unwrap().len(), 13 * 26 * 4);
    }

    #[test]
    fn grid_validation() {
        let mut g = GridSpec::default();
        g.n_values.clear();
        assert!(matches!(g.configs(Variant::Sld), Err(Error::EmptyGrid(_))));
        let mut g = GridSpec::default();
        g.theta_values.clear();
        assert!(g.configs(Variant::Sld).is_err());
        assert!(g.configs(Variant::Pc).is_ok());
        let mut g = GridSpec::default();
        g.acf_star_values.push(1.2);
        assert!(matches!(
            g.configs(Variant::Pc),
            Err(Error::InvalidParameter(_))
        ));
        let g = GridSpec {
            split: Split::BarFraction(1.0),
            ..GridSpec::default()
        };
        assert!(g.configs(Variant::Pc).is_err());
    }

    #[test]
    fn too_short_for_any_config() {
        let s = PriceSeries::from_closes("s", vec![1.0; 30]).unwrap();
        let g = GridSpec {
            n_values: vec![10],
            ..GridSpec::single(
                &StrategyConfig::reference(Variant::Pc),
                Split::BarFraction(0.7),
            )
        };
        assert!(matches!(
            grid_search(&s, &g, Variant::Pc, &CostModel::default()),
            Err(Error::EmptyGrid(_))
        ));
    }
}
