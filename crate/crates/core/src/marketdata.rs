//! Close-price series ingestion, validation and windowing.
//!
//! Bars are treated as logically uniform by index: bar `k + 1` follows bar `k`
//! even when the wall clock skips a weekend. Such gaps are either rejected at
//! ingest or recorded in [`PriceSeries::gaps`], and the true timestamps are kept.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;

use crate::error::{Error, Result};

/// Seconds in one "four hours" bar.
pub const FOUR_HOURS: i64 = 14_400;

/// Price quantum of a four-digit FX quote.
pub const FOUR_DIGIT_PIP: f64 = 0.0001;

/// Uniform series of close prices with their bar timestamps.
///
/// Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    symbol: String,
    bar_seconds: i64,
    timestamps: Vec<i64>,
    closes: Vec<f64>,
    pip: f64,
    gaps: Vec<usize>,
}

impl PriceSeries {
    pub fn new(
        symbol: impl Into<String>,
        bar_seconds: i64,
        timestamps: Vec<i64>,
        closes: Vec<f64>,
        pip: f64,
    ) -> Result<Self> {
        if bar_seconds <= 0 {
            return Err(Error::InvalidSeries(format!(
                "bar_seconds must be positive, got {bar_seconds}"
            )));
        }
        if !(pip > 0.0 && pip.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "pip must be positive, got {pip}"
            )));
        }
        if timestamps.len() != closes.len() {
            return Err(Error::InvalidSeries(format!(
                "{} timestamps for {} closes",
                timestamps.len(),
                closes.len()
            )));
        }
        if let Some(k) = closes.iter().position(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidSeries(format!(
                "close at bar {k} is not a positive number: {}",
                closes[k]
            )));
        }
        let mut gaps = Vec::new();
        for (k, pair) in timestamps.windows(2).enumerate() {
            let step = pair[1] - pair[0];
            if step <= 0 {
                return Err(Error::InvalidSeries(format!(
                    "timestamps not strictly increasing at bar {}",
                    k + 1
                )));
            }
            if step != bar_seconds {
                gaps.push(k + 1);
            }
        }
        Ok(Self {
            symbol: symbol.into(),
            bar_seconds,
            timestamps,
            closes,
            pip,
            gaps,
        })
    }

    /// Gapless 4h series starting at epoch 0 with four-digit pip.
    pub fn from_closes(symbol: impl Into<String>, closes: Vec<f64>) -> Result<Self> {
        let timestamps = (0..closes.len() as i64).map(|k| k * FOUR_HOURS).collect();
        Self::new(symbol, FOUR_HOURS, timestamps, closes, FOUR_DIGIT_PIP)
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn bar_seconds(&self) -> i64 {
        self.bar_seconds
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn closes(&self) -> &[f64] {
        &self.closes
    }

    pub fn pip(&self) -> f64 {
        self.pip
    }

    /// Indices `k` whose spacing from bar `k - 1` differs from `bar_seconds`.
    pub fn gaps(&self) -> &[usize] {
        &self.gaps
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }

    /// Wall-clock span from the first to the last bar, in years of 365.25 days.
    pub fn span_years(&self) -> f64 {
        match (self.timestamps.first(), self.timestamps.last()) {
            (Some(a), Some(b)) => (b - a) as f64 / (365.25 * 86_400.0),
            _ => 0.0,
        }
    }

    /// The first `len` bars as a new series.
    pub fn prefix(&self, len: usize) -> Self {
        let len = len.min(self.len());
        Self {
            symbol: self.symbol.clone(),
            bar_seconds: self.bar_seconds,
            timestamps: self.timestamps[..len].to_vec(),
            closes: self.closes[..len].to_vec(),
            pip: self.pip,
            gaps: self.gaps.iter().copied().filter(|&k| k < len).collect(),
        }
    }

    /// Same bars with every close transformed by `f`.
    pub fn map_closes(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.symbol.clone(),
            self.bar_seconds,
            self.timestamps.clone(),
            self.closes.iter().map(|&p| f(p)).collect(),
            self.pip,
        )
    }

    /// Writes the canonical `timestamp,close` CSV.
    ///
    /// Closes use the shortest representation that parses back to the same
    /// `f64`, so a reload is bit-identical.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["timestamp", "close"])?;
        for (t, p) in self.timestamps.iter().zip(&self.closes) {
            out.write_record([t.to_string(), format!("{p}")])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// How timestamps are written in the input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimestampFormat {
    /// Integer seconds since the Unix epoch.
    EpochSeconds,
    /// A `chrono` format string interpreted as UTC, e.g. `%Y-%m-%d %H:%M`.
    DateTime(String),
}

impl TimestampFormat {
    pub fn date_time() -> Self {
        TimestampFormat::DateTime("%Y-%m-%d %H:%M".to_string())
    }

    fn parse(&self, raw: &str) -> std::result::Result<i64, String> {
        let raw = raw.trim();
        match self {
            TimestampFormat::EpochSeconds => raw
                .parse::<i64>()
                .map_err(|e| format!("bad epoch timestamp `{raw}`: {e}")),
            TimestampFormat::DateTime(fmt) => NaiveDateTime::parse_from_str(raw, fmt)
                .map(|dt| dt.and_utc().timestamp())
                .map_err(|e| format!("bad timestamp `{raw}` for format `{fmt}`: {e}")),
        }
    }
}

/// Column mapping and validation policy for [`load_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSpec {
    pub timestamp_column: String,
    pub close_column: String,
    pub timestamp_format: TimestampFormat,
    pub bar_seconds: i64,
    pub pip: f64,
    /// Symbol recorded on the series; defaults to the file stem.
    pub symbol: Option<String>,
    /// Accept wall-clock gaps and record them in [`PriceSeries::gaps`].
    pub repair_gaps: bool,
    /// Largest spacing, in bars, tolerated when `repair_gaps` is off.
    pub gap_tolerance_bars: i64,
}

impl Default for CsvSpec {
    fn default() -> Self {
        Self {
            timestamp_column: "timestamp".to_string(),
            close_column: "close".to_string(),
            timestamp_format: TimestampFormat::EpochSeconds,
            bar_seconds: FOUR_HOURS,
            pip: FOUR_DIGIT_PIP,
            symbol: None,
            repair_gaps: true,
            gap_tolerance_bars: 1,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, spec: &CsvSpec) -> Result<PriceSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut spec = spec.clone();
    if spec.symbol.is_none() {
        spec.symbol = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }
    read_csv(file, &spec)
}

/// Parses and validates a close-price CSV from any reader.
pub fn read_csv<R: Read>(reader: R, spec: &CsvSpec) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let ts_col = find(&spec.timestamp_column)?;
    let close_col = find(&spec.close_column)?;

    let mut timestamps: Vec<i64> = Vec::new();
    let mut closes = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::MalformedRow {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |col: usize| {
            record.get(col).ok_or_else(|| Error::MalformedRow {
                line,
                message: format!("missing field {}", col + 1),
            })
        };
        let timestamp = spec
            .timestamp_format
            .parse(field(ts_col)?)
            .map_err(|message| Error::MalformedRow { line, message })?;
        let raw_close = field(close_col)?;
        let price: f64 = raw_close.parse().map_err(|_| Error::MalformedRow {
            line,
            message: format!("bad close price `{raw_close}`"),
        })?;
        if !(price > 0.0 && price.is_finite()) {
            return Err(Error::NonPositivePrice { line, price });
        }
        if let Some(&prev) = timestamps.last() {
            let step = timestamp - prev;
            if step == 0 {
                return Err(Error::DuplicateTimestamp { line, timestamp });
            }
            if step < 0 {
                return Err(Error::NonMonotonicTimestamp { line, timestamp });
            }
            let tolerance_seconds = spec.gap_tolerance_bars * spec.bar_seconds;
            if !spec.repair_gaps && step > tolerance_seconds {
                return Err(Error::Gap {
                    line,
                    gap_seconds: step,
                    tolerance_seconds,
                });
            }
        }
        timestamps.push(timestamp);
        closes.push(price);
    }

    let symbol = spec.symbol.clone().unwrap_or_else(|| "series".to_string());
    PriceSeries::new(symbol, spec.bar_seconds, timestamps, closes, spec.pip)
}

/// `length` bars ending at (and including) `end_index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub end_index: usize,
    pub length: usize,
}

impl Window {
    pub fn new(end_index: usize, length: usize) -> Self {
        Self { end_index, length }
    }
}

/// Closes `[end_index - length + 1 ..= end_index]`.
pub fn slice_window(series: &PriceSeries, window: Window) -> Result<&[f64]> {
    window_of(series.closes(), window)
}

pub(crate) fn window_of(prices: &[f64], window: Window) -> Result<&[f64]> {
    let Window { end_index, length } = window;
    if length == 0 || end_index + 1 < length || end_index >= prices.len() {
        return Err(Error::WindowOutOfRange {
            end_index,
            length,
            len: prices.len(),
        });
    }
    Ok(&prices[end_index + 1 - length..=end_index])
}
