//! Run configuration: command-line flags over `key = value` file over defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use regimeshift::backtest::CostModel;
use regimeshift::marketdata::{CsvSpec, TimestampFormat};
use regimeshift::optimize::{GridSpec, Split};
use regimeshift::synth::{SynthModel, SynthSpec, TransitionKind};
use regimeshift::{StrategyConfig, Variant};

/// Flags shared by every subcommand; each maps to the config key in brackets.
#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// Input price CSV [data]
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Flat `key = value` configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory [out_dir]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,

    /// Timestamp column name [timestamp_column]
    #[arg(long)]
    pub timestamp_column: Option<String>,
    /// Close column name [close_column]
    #[arg(long)]
    pub close_column: Option<String>,
    /// `epoch` or a chrono format such as `%Y-%m-%d %H:%M` [timestamp_format]
    #[arg(long)]
    pub timestamp_format: Option<String>,
    /// Seconds per bar [bar_seconds]
    #[arg(long)]
    pub bar_seconds: Option<i64>,
    /// Reject gaps instead of marking them [repair_gaps = false]
    #[arg(long)]
    pub no_gap_repair: bool,
    /// Largest accepted spacing in bars when gap repair is off [gap_tolerance_bars]
    #[arg(long)]
    pub gap_tolerance_bars: Option<i64>,

    /// Detector variant: sld or pc [variant]
    #[arg(long)]
    pub variant: Option<String>,
    /// Window length in bars [n]
    #[arg(long)]
    pub n: Option<usize>,
    /// Band width in σ units [f]
    #[arg(long)]
    pub f: Option<f64>,
    /// Diffusion growth ceiling, sld only [theta]
    #[arg(long)]
    pub theta: Option<f64>,
    /// Short-memory ACF threshold [acf_star]
    #[arg(long)]
    pub acf_star: Option<f64>,

    /// Round-trip spread in pips [spread_pips]
    #[arg(long)]
    pub spread_pips: Option<f64>,
    /// Long swap in pips per night [swap_long]
    #[arg(long)]
    pub swap_long: Option<f64>,
    /// Short swap in pips per night [swap_short]
    #[arg(long)]
    pub swap_short: Option<f64>,
    /// Price quantum [pip]
    #[arg(long)]
    pub pip: Option<f64>,
    /// Notional per trade [notional]
    #[arg(long)]
    pub notional: Option<f64>,
    /// Bars per swap night [bars_per_day]
    #[arg(long)]
    pub bars_per_day: Option<usize>,

    /// In-sample fraction of bars [split]
    #[arg(long)]
    pub split: Option<f64>,
    /// In-sample trade count, replacing the bar split [split_trades]
    #[arg(long)]
    pub split_trades: Option<usize>,
    /// Comma-separated N candidates [grid_n]
    #[arg(long)]
    pub grid_n: Option<String>,
    /// Comma-separated F candidates [grid_f]
    #[arg(long)]
    pub grid_f: Option<String>,
    /// Comma-separated theta candidates [grid_theta]
    #[arg(long)]
    pub grid_theta: Option<String>,
    /// Comma-separated ACF* candidates [grid_acf_star]
    #[arg(long)]
    pub grid_acf_star: Option<String>,

    /// Generator: fbm, mean-revert, compression-jump, variance-ramp [model]
    #[arg(long)]
    pub model: Option<String>,
    /// Bars to generate [length]
    #[arg(long)]
    pub length: Option<usize>,
    /// Random seed [seed]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hurst exponent for fbm [hurst]
    #[arg(long)]
    pub hurst: Option<f64>,
    /// Per-bar log-price scale [volatility]
    #[arg(long)]
    pub volatility: Option<f64>,
    /// Pull toward the base price per bar [reversion_rate]
    #[arg(long)]
    pub reversion_rate: Option<f64>,
    /// Bar of the planted pattern [transition_index]
    #[arg(long)]
    pub transition_index: Option<usize>,
}

const KNOWN_KEYS: &[&str] = &[
    "data",
    "out_dir",
    "timestamp_column",
    "close_column",
    "timestamp_format",
    "bar_seconds",
    "repair_gaps",
    "gap_tolerance_bars",
    "variant",
    "n",
    "f",
    "theta",
    "acf_star",
    "spread_pips",
    "swap_long",
    "swap_short",
    "pip",
    "notional",
    "bars_per_day",
    "split",
    "split_trades",
    "grid_n",
    "grid_f",
    "grid_theta",
    "grid_acf_star",
    "model",
    "length",
    "seed",
    "hurst",
    "volatility",
    "reversion_rate",
    "transition_index",
];

/// Parses a flat `key = value` file; `#` starts a comment line.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected `key = value`", k + 1))?;
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            bail!("config line {}: unknown key `{key}`", k + 1);
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            bail!("config line {}: duplicate key `{key}`", k + 1);
        }
    }
    Ok(map)
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub csv: CsvSpec,
    pub strategy: StrategyConfig,
    pub costs: CostModel,
    pub grid: GridSpec,
    pub synth: SynthSpec,
}

struct Resolver {
    file: BTreeMap<String, String>,
}

impl Resolver {
    fn get<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow!("config key `{key}`: invalid value `{v}`: {e}"))
            })
            .transpose()
    }

    fn or<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    fn list<T>(&self, flag: Option<String>, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.get(flag, key)? {
            None => Ok(default),
            Some(text) => parse_list(&text).with_context(|| format!("`{key}`")),
        }
    }
}

fn parse_list<T>(text: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| anyhow!("invalid list item `{s}`: {e}"))
        })
        .collect()
}

impl RunConfig {
    pub fn resolve(flags: &Flags) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read config {}", path.display()))?;
                parse_config_text(&text).with_context(|| path.display().to_string())?
            }
            None => BTreeMap::new(),
        };
        Self::from_parts(flags, file)
    }

    pub fn from_parts(flags: &Flags, file: BTreeMap<String, String>) -> Result<Self> {
        let r = Resolver { file };
        let f = flags.clone();

        let csv_default = CsvSpec::default();
        let timestamp_format = match r.get(f.timestamp_format, "timestamp_format")? {
            None => csv_default.timestamp_format.clone(),
            Some(s) if s.eq_ignore_ascii_case("epoch") => TimestampFormat::EpochSeconds,
            Some(s) => TimestampFormat::DateTime(s),
        };
        let repair_gaps = if f.no_gap_repair {
            false
        } else {
            r.or(None, "repair_gaps", true)?
        };
        let pip = r.or(f.pip, "pip", csv_default.pip)?;
        let csv = CsvSpec {
            timestamp_column: r.or(
                f.timestamp_column,
                "timestamp_column",
                csv_default.timestamp_column,
            )?,
            close_column: r.or(f.close_column, "close_column", csv_default.close_column)?,
            timestamp_format,
            bar_seconds: r.or(f.bar_seconds, "bar_seconds", csv_default.bar_seconds)?,
            pip,
            symbol: None,
            repair_gaps,
            gap_tolerance_bars: r.or(
                f.gap_tolerance_bars,
                "gap_tolerance_bars",
                csv_default.gap_tolerance_bars,
            )?,
        };

        let variant: Variant = r
            .or::<String>(f.variant, "variant", "sld".into())?
            .parse()?;
        let reference = StrategyConfig::reference(variant);
        let strategy = StrategyConfig {
            variant,
            n: r.or(f.n, "n", reference.n)?,
            band: r.or(f.f, "f", reference.band)?,
            theta: match variant {
                Variant::Sld => Some(r.or(f.theta, "theta", 0.1)?),
                Variant::Pc => None,
            },
            acf_star: r.or(f.acf_star, "acf_star", reference.acf_star)?,
        };

        let cost_default = CostModel::default();
        let costs = CostModel {
            spread_pips: r.or(f.spread_pips, "spread_pips", cost_default.spread_pips)?,
            swap_long_pips_per_night: r.or(
                f.swap_long,
                "swap_long",
                cost_default.swap_long_pips_per_night,
            )?,
            swap_short_pips_per_night: r.or(
                f.swap_short,
                "swap_short",
                cost_default.swap_short_pips_per_night,
            )?,
            pip,
            notional: r.or(f.notional, "notional", cost_default.notional)?,
            bars_per_day: r.or(f.bars_per_day, "bars_per_day", cost_default.bars_per_day)?,
        };

        let grid_default = GridSpec::default();
        let split = match r.get(f.split_trades, "split_trades")? {
            Some(k) => Split::TradeCount(k),
            None => Split::BarFraction(r.or(f.split, "split", 0.7)?),
        };
        let grid = GridSpec {
            n_values: r.list(f.grid_n, "grid_n", grid_default.n_values)?,
            band_values: r.list(f.grid_f, "grid_f", grid_default.band_values)?,
            theta_values: r.list(f.grid_theta, "grid_theta", grid_default.theta_values)?,
            acf_star_values: r.list(
                f.grid_acf_star,
                "grid_acf_star",
                grid_default.acf_star_values,
            )?,
            split,
        };

        let transition_index = r.get(f.transition_index, "transition_index")?;
        let length = r.or(f.length, "length", 4096)?;
        let model_name = r.or::<String>(f.model, "model", "fbm".into())?;
        let planted = |kind| SynthModel::PlantedTransition {
            kind,
            transition_index: transition_index.unwrap_or(length / 2),
        };
        let model = match model_name.as_str() {
            "fbm" => SynthModel::Fbm {
                hurst: r.or(f.hurst, "hurst", 0.5)?,
            },
            "mean-revert" => SynthModel::MeanRevert {
                reversion_rate: r.or(f.reversion_rate, "reversion_rate", 0.2)?,
            },
            "compression-jump" => planted(TransitionKind::CompressionJump),
            "variance-ramp" => planted(TransitionKind::VarianceRamp),
            other => bail!(
                "unknown model `{other}` (expected fbm, mean-revert, compression-jump or variance-ramp)"
            ),
        };
        let synth = SynthSpec {
            model,
            length,
            seed: r.or(f.seed, "seed", 0)?,
            volatility: r.or(f.volatility, "volatility", 1e-3)?,
        };

        Ok(Self {
            data: r.get(f.data, "data")?,
            out_dir: r.or(f.out_dir, "out_dir", PathBuf::from("."))?,
            csv,
            strategy,
            costs,
            grid,
            synth,
        })
    }

    pub fn data_path(&self) -> Result<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| anyhow!("no input data: pass --data or set `data` in the config"))
    }
}
