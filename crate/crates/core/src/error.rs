use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("line {line}: duplicate timestamp {timestamp}")]
    DuplicateTimestamp { line: u64, timestamp: i64 },

    #[error("line {line}: timestamp {timestamp} is not after the previous bar")]
    NonMonotonicTimestamp { line: u64, timestamp: i64 },

    #[error("line {line}: non-positive close price {price}")]
    NonPositivePrice { line: u64, price: f64 },

    #[error("line {line}: gap of {gap_seconds}s exceeds tolerance of {tolerance_seconds}s")]
    Gap {
        line: u64,
        gap_seconds: i64,
        tolerance_seconds: i64,
    },

    #[error("missing column `{0}` in header")]
    MissingColumn(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error(
        "window ending at bar {end_index} with length {length} does not fit a series of {len} bars"
    )]
    WindowOutOfRange {
        end_index: usize,
        length: usize,
        len: usize,
    },

    #[error("bar {index} needs at least {required} bars of history")]
    InsufficientHistory { index: usize, required: usize },

    #[error("need at least {required} points, got {got}")]
    TooFewPoints { required: usize, got: usize },

    #[error("regression abscissa is degenerate")]
    DegenerateAbscissa,

    #[error("mean-square displacement is zero at lag {lag}")]
    ZeroDisplacement { lag: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid signal sequence: {0}")]
    InvalidSignals(String),

    #[error("empty grid: {0}")]
    EmptyGrid(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
