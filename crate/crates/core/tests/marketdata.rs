use regimeshift::marketdata::{load_csv, read_csv, slice_window, CsvSpec, TimestampFormat};
use regimeshift::{Error, PriceSeries, Window};

fn parse(text: &str, spec: &CsvSpec) -> regimeshift::Result<PriceSeries> {
    read_csv(text.as_bytes(), spec)
}

#[test]
fn reads_dated_bars_with_custom_columns() {
    let spec = CsvSpec {
        timestamp_column: "Time".into(),
        close_column: "Close".into(),
        timestamp_format: TimestampFormat::date_time(),
        ..CsvSpec::default()
    };
    let text = "Time,Open,Close\n2010-07-01 00:00,1.50,1.5012\n2010-07-01 04:00,1.5012,1.4999\n";
    let s = parse(text, &spec).unwrap();
    assert_eq!(s.closes(), &[1.5012, 1.4999]);
    assert_eq!(s.timestamps()[1] - s.timestamps()[0], 14_400);
    assert_eq!(s.timestamps()[0], 1_277_942_400);
    assert!(s.gaps().is_empty());
}

#[test]
fn rejects_bad_rows_with_line_numbers() {
    let spec = CsvSpec::default();
    let err = |text: &str| parse(text, &spec).unwrap_err();
    assert!(matches!(
        err("timestamp,close\n0,1.5\n0,1.6\n"),
        Error::DuplicateTimestamp { line: 3, .. }
    ));
    assert!(matches!(
        err("timestamp,close\n14400,1.5\n0,1.6\n"),
        Error::NonMonotonicTimestamp { line: 3, .. }
    ));
    assert!(matches!(
        err("timestamp,close\n0,1.5\n14400,-1\n"),
        Error::NonPositivePrice { line: 3, .. }
    ));
    assert!(matches!(
        err("timestamp,close\n0,abc\n"),
        Error::MalformedRow { line: 2, .. }
    ));
    assert!(matches!(err("timestamp,price\n0,1.5\n"), Error::MissingColumn(c) if c == "close"));
}

#[test]
fn weekend_gaps_are_marked_or_rejected() {
    let text = "timestamp,close\n0,1.5\n14400,1.5\n187200,1.5\n201600,1.5\n";
    let s = parse(text, &CsvSpec::default()).unwrap();
    assert_eq!(s.gaps(), &[2]);
    let strict = CsvSpec {
        repair_gaps: false,
        ..CsvSpec::default()
    };
    assert!(matches!(
        parse(text, &strict),
        Err(Error::Gap { line: 4, .. })
    ));
    let lenient = CsvSpec {
        repair_gaps: false,
        gap_tolerance_bars: 13,
        ..CsvSpec::default()
    };
    assert_eq!(parse(text, &lenient).unwrap().len(), 4);
}

#[test]
fn canonical_file_reloads_bit_identically() {
    let closes: Vec<f64> = (0..50).map(|k| 1.5 + (k as f64).sin() / 7.0).collect();
    let s = PriceSeries::from_closes("X", closes).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    s.save(&path).unwrap();
    let back = load_csv(&path, &CsvSpec::default()).unwrap();
    assert_eq!(back.closes(), s.closes());
    assert_eq!(back.timestamps(), s.timestamps());
    assert_eq!(back.symbol(), "x");
    assert!(matches!(
        load_csv(dir.path().join("none.csv"), &CsvSpec::default()),
        Err(Error::Io { .. })
    ));
}

#[test]
fn windows_are_contiguous_slices() {
    let s = PriceSeries::from_closes("X", (1..=10).map(f64::from).collect()).unwrap();
    assert_eq!(
        slice_window(&s, Window::new(4, 3)).unwrap(),
        &[3.0, 4.0, 5.0]
    );
    assert!(slice_window(&s, Window::new(1, 3)).is_err());
    assert!(slice_window(&s, Window::new(10, 3)).is_err());
}
