//! `regimeshift`: ingest prices, generate synthetic series, detect, backtest and optimise.
//!
//! Exit status is 0 on success, 1 for usage and input errors, 2 for internal
//! failures such as an unwritable output directory.

mod config;

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use regimeshift::backtest::{run_backtest, write_trades_csv, BacktestReport};
use regimeshift::detectors::{run_detector, write_signals_csv};
use regimeshift::marketdata::{load_csv, PriceSeries};
use regimeshift::numfmt::sig;
use regimeshift::optimize::{grid_search, Split};
use regimeshift::rollingstats::DiagnosticsTable;
use regimeshift::synth::generate;

use config::{Flags, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "regimeshift",
    version,
    about = "Regime-transition precursors on price series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a price CSV and write it in canonical form as series.csv
    #[command(allow_negative_numbers = true)]
    Ingest(Flags),
    /// Generate a synthetic series as series.csv
    #[command(allow_negative_numbers = true)]
    Synth(Flags),
    /// Run a detector and write signals.csv and diagnostics.csv
    #[command(allow_negative_numbers = true)]
    Detect(Flags),
    /// Run a detector with costs and write trades.csv, yield_curve.csv and summary.txt
    #[command(allow_negative_numbers = true)]
    Backtest(Flags),
    /// Grid-search parameters in-sample and write leaderboard.csv and summary.txt
    #[command(allow_negative_numbers = true)]
    Optimize(Flags),
}

/// Wraps failures that are not the user's fault; these exit with status 2.
#[derive(Debug)]
struct Internal(anyhow::Error);

impl fmt::Display for Internal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for Internal {}

fn internal(e: impl Into<anyhow::Error>) -> anyhow::Error {
    Internal(e.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("usage error");
            eprintln!("{first} (see --help)");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Internal>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest(flags) => ingest(&RunConfig::resolve(&flags)?),
        Command::Synth(flags) => synth(&RunConfig::resolve(&flags)?),
        Command::Detect(flags) => detect(&RunConfig::resolve(&flags)?),
        Command::Backtest(flags) => backtest(&RunConfig::resolve(&flags)?),
        Command::Optimize(flags) => optimize(&RunConfig::resolve(&flags)?),
    }
}

fn load(cfg: &RunConfig) -> Result<PriceSeries> {
    let path = cfg.data_path()?;
    Ok(load_csv(path, &cfg.csv)?)
}

/// Opens `name` inside the output directory, creating the directory if needed.
fn create(cfg: &RunConfig, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))
        .map_err(internal)?;
    let path = cfg.out_dir.join(name);
    File::create(&path)
        .with_context(|| format!("creating {}", path.display()))
        .map(BufWriter::new)
        .map_err(internal)
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(internal)
}

fn write_series(cfg: &RunConfig, series: &PriceSeries) -> Result<()> {
    let mut w = create(cfg, "series.csv")?;
    series.write_csv(&mut w).map_err(internal)?;
    finish(w)?;
    report_path(&cfg.out_dir.join("series.csv"));
    Ok(())
}

fn report_path(path: &Path) {
    println!("wrote {}", path.display());
}

fn ingest(cfg: &RunConfig) -> Result<()> {
    let series = load(cfg)?;
    write_series(cfg, &series)?;
    println!("bars = {}", series.len());
    println!("gaps = {}", series.gaps().len());
    Ok(())
}

fn synth(cfg: &RunConfig) -> Result<()> {
    let series = generate(&cfg.synth)?;
    write_series(cfg, &series)
}

fn detect(cfg: &RunConfig) -> Result<()> {
    let series = load(cfg)?;
    let signals = run_detector(&series, &cfg.strategy)?;
    let mut w = create(cfg, "signals.csv")?;
    write_signals_csv(&series, &signals, &mut w).map_err(internal)?;
    finish(w)?;

    let table = DiagnosticsTable::compute(series.closes(), cfg.strategy.n)?;
    let mut w = create(cfg, "diagnostics.csv")?;
    table.write_csv(&mut w).map_err(internal)?;
    finish(w)?;

    println!("signals = {}", signals.len());
    Ok(())
}

fn write_report(cfg: &RunConfig, report: &BacktestReport) -> Result<()> {
    let mut w = create(cfg, "trades.csv")?;
    write_trades_csv(&report.trades, &mut w).map_err(internal)?;
    finish(w)?;
    let mut w = create(cfg, "yield_curve.csv")?;
    report.write_yield_curve_csv(&mut w).map_err(internal)?;
    finish(w)
}

fn backtest(cfg: &RunConfig) -> Result<()> {
    let series = load(cfg)?;
    let report = run_backtest(&series, &cfg.strategy, &cfg.costs)?;
    write_report(cfg, &report)?;
    let mut w = create(cfg, "summary.txt")?;
    writeln!(w, "variant = {}", cfg.strategy.variant).map_err(internal)?;
    write_config_lines(&mut w, "", &cfg.strategy)?;
    report.write_summary(&mut w).map_err(internal)?;
    finish(w)?;
    for (k, v) in report.summary_lines() {
        println!("{k} = {v}");
    }
    Ok(())
}

fn write_config_lines(
    w: &mut impl Write,
    prefix: &str,
    s: &regimeshift::StrategyConfig,
) -> Result<()> {
    let theta = s.theta.map(sig).unwrap_or_else(|| "na".into());
    (|| -> std::io::Result<()> {
        writeln!(w, "{prefix}n = {}", s.n)?;
        writeln!(w, "{prefix}f = {}", sig(s.band))?;
        writeln!(w, "{prefix}theta = {theta}")?;
        writeln!(w, "{prefix}acf_star = {}", sig(s.acf_star))
    })()
    .map_err(internal)
}

fn optimize(cfg: &RunConfig) -> Result<()> {
    let series = load(cfg)?;
    let variant = cfg.strategy.variant;
    let result = grid_search(&series, &cfg.grid, variant, &cfg.costs)?;

    let mut w = create(cfg, "leaderboard.csv")?;
    result.write_leaderboard_csv(&mut w).map_err(internal)?;
    finish(w)?;
    write_report(cfg, &result.full_report)?;

    let mut w = create(cfg, "summary.txt")?;
    let split = match cfg.grid.split {
        Split::BarFraction(f) => format!("bars {}", sig(f)),
        Split::TradeCount(k) => format!("trades {k}"),
    };
    (|| -> std::io::Result<()> {
        writeln!(w, "variant = {variant}")?;
        writeln!(w, "split = {split}")?;
        writeln!(w, "split_bar = {}", result.split_bar)?;
        writeln!(w, "grid_points = {}", result.leaderboard.len())
    })()
    .map_err(internal)?;
    write_config_lines(&mut w, "best_", &result.best_config)?;
    for (prefix, report) in [
        ("in_sample", &result.in_sample_report),
        ("out_sample", &result.out_sample_report),
        ("full", &result.full_report),
    ] {
        for (k, v) in report.summary_lines() {
            writeln!(w, "{prefix}_{k} = {v}").map_err(internal)?;
        }
    }
    finish(w)?;

    let best = &result.best_config;
    println!(
        "best n = {}, f = {}, theta = {}, acf_star = {}",
        best.n,
        sig(best.band),
        best.theta.map(sig).unwrap_or_else(|| "na".into()),
        sig(best.acf_star)
    );
    println!(
        "in-sample yield = {}, out-of-sample yield = {}",
        sig(result.in_sample_report.final_yield),
        sig(result.out_sample_report.final_yield)
    );
    Ok(())
}
