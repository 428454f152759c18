mod common;

use common::{oracle_pnl, random_signals, random_walk, series};
use regimeshift::backtest::{
    execute, max_drawdown, read_trades_csv, run_backtest, series_years, write_trades_csv,
    BacktestReport, CostModel,
};
use regimeshift::numfmt::sig;
use regimeshift::{StrategyConfig, Variant};

fn cost_models() -> [CostModel; 3] {
    [
        CostModel::default(),
        CostModel::zero(),
        CostModel {
            spread_pips: 0.7,
            swap_long_pips_per_night: -0.2,
            swap_short_pips_per_night: 1.3,
            pip: 0.01,
            notional: 25_000.0,
            bars_per_day: 24,
        },
    ]
}

#[test]
fn execute_matches_hand_calculator() {
    for seed in 0..200 {
        let s = series(random_walk(seed, 300, 3e-3));
        let signals = random_signals(seed, s.len());
        for costs in cost_models() {
            let trades = execute(&s, &signals, &costs).unwrap();
            let expected = oracle_pnl(s.closes(), &signals, &costs);
            assert_eq!(trades.len(), expected.len(), "seed {seed}");
            for (t, e) in trades.iter().zip(&expected) {
                assert_eq!((t.entry_index, t.exit_index, t.nights), (e.0, e.1, e.2));
                assert_eq!(t.pnl_pips, e.3, "seed {seed}");
                assert_eq!(t.yield_fraction, e.4, "seed {seed}");
            }
        }
    }
}

#[test]
fn report_metrics_follow_the_curve() {
    let s = series(random_walk(3, 2000, 2e-3));
    let report = run_backtest(
        &s,
        &StrategyConfig::reference(Variant::Sld),
        &CostModel::default(),
    )
    .unwrap();
    assert!(report.n_trades() >= 3);
    let mut acc = 0.0;
    for (t, y) in report.trades.iter().zip(&report.yield_curve) {
        acc += t.yield_fraction;
        assert_eq!(acc, *y);
    }
    assert_eq!(report.final_yield, acc);
    assert_eq!(report.max_drawdown, max_drawdown(&report.yield_curve));
    assert_eq!(report.calmar, report.final_yield / report.max_drawdown);
    assert_eq!(
        report.annualized_yield,
        report.final_yield / series_years(&s)
    );
    let r2 = report.r_squared.unwrap();
    assert!((0.0..=1.0).contains(&r2));
    assert!((0.0..=1.0).contains(&report.fisher_p.unwrap()));
}

#[test]
fn trade_csv_round_trips_at_nine_digits() {
    let s = series(random_walk(12, 1500, 2e-3));
    let report = run_backtest(
        &s,
        &StrategyConfig::reference(Variant::Pc),
        &CostModel::default(),
    )
    .unwrap();
    let mut buf = Vec::new();
    write_trades_csv(&report.trades, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with(
        "k,entry_ts,exit_ts,direction,entry_price,exit_price,nights,pnl_pips,yield_fraction,forced\n"
    ));
    let back = read_trades_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), report.n_trades());
    for (r, t) in back.iter().zip(&report.trades) {
        assert_eq!(
            (r.entry_ts, r.exit_ts, r.direction, r.nights, r.forced),
            (t.entry_ts, t.exit_ts, t.direction, t.nights, t.forced)
        );
        assert_eq!(sig(r.pnl_pips), sig(t.pnl_pips));
        assert_eq!(sig(r.yield_fraction), sig(t.yield_fraction));
        assert_eq!(sig(r.entry_price), sig(t.entry_price));
    }
}

#[test]
fn summary_and_curve_files() {
    let s = series(random_walk(2, 1200, 2e-3));
    let report = run_backtest(
        &s,
        &StrategyConfig::reference(Variant::Sld),
        &CostModel::default(),
    )
    .unwrap();
    let mut summary = Vec::new();
    report.write_summary(&mut summary).unwrap();
    let keys: Vec<String> = String::from_utf8(summary)
        .unwrap()
        .lines()
        .map(|l| l.split(" = ").next().unwrap().to_string())
        .collect();
    assert_eq!(
        keys,
        [
            "final_yield",
            "max_drawdown",
            "calmar",
            "annualized_yield",
            "r_squared",
            "fisher_p",
            "n_trades"
        ]
    );
    let mut curve = Vec::new();
    report.write_yield_curve_csv(&mut curve).unwrap();
    let curve = String::from_utf8(curve).unwrap();
    assert_eq!(curve.lines().count(), report.n_trades() + 1);
    assert!(curve.starts_with("trade_index,cum_yield\n1,"));
}

#[test]
fn short_reports_omit_regression() {
    let r = BacktestReport::from_trades(Vec::new(), 1.0).unwrap();
    assert_eq!((r.final_yield, r.max_drawdown, r.calmar), (0.0, 0.0, 0.0));
    assert!(r.r_squared.is_none() && r.fisher_p.is_none());
    assert!(r
        .summary_lines()
        .iter()
        .any(|(k, v)| k == "fisher_p" && v == "na"));
}
