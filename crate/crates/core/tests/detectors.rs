mod common;

use common::{random_walk, series};
use regimeshift::detectors::{
    pc_entry_check, pc_exit_check, run_detector, sld_entry_check, sld_exit_check,
};
use regimeshift::{Action, Direction, Signal, StrategyConfig, Variant};

fn configs() -> [StrategyConfig; 4] {
    [
        StrategyConfig::reference(Variant::Sld),
        StrategyConfig::reference(Variant::Pc),
        StrategyConfig::sld(8, 1.0, 0.3, 0.9),
        StrategyConfig::pc(3, 0.8, 0.5),
    ]
}

fn assert_well_formed(signals: &[Signal], len: usize) {
    for (k, s) in signals.iter().enumerate() {
        let expect = if k % 2 == 0 {
            Action::Open
        } else {
            Action::Close
        };
        assert_eq!(s.action, expect, "signal {k}");
        assert!(s.index < len);
        assert_eq!(
            s.forced,
            k + 1 == signals.len() && s.index == len - 1 && s.forced
        );
    }
    for pair in signals.windows(2) {
        assert!(pair[1].index >= pair[0].index);
        if pair[1].index == pair[0].index {
            assert!(pair[1].forced, "two actions on bar {}", pair[0].index);
        }
    }
    for pair in signals.chunks(2) {
        assert_eq!(pair.len(), 2, "unpaired open");
        assert_eq!(pair[0].direction, pair[1].direction);
    }
}

#[test]
fn signals_alternate_on_many_series() {
    for seed in 0..100 {
        let s = series(random_walk(seed, 500, 2e-3));
        for cfg in configs() {
            let signals = run_detector(&s, &cfg).unwrap();
            assert_well_formed(&signals, s.len());
        }
    }
}

#[test]
fn truncation_does_not_change_earlier_signals() {
    let s = series(random_walk(77, 900, 2e-3));
    for cfg in configs() {
        let full = run_detector(&s, &cfg).unwrap();
        for cut in (cfg.first_valid_bar() + 1..s.len()).step_by(37) {
            let mut part = run_detector(&s.prefix(cut), &cfg).unwrap();
            if part.last().is_some_and(|x| x.forced) {
                part.pop();
            }
            let expected: Vec<Signal> = full.iter().copied().filter(|x| x.index < cut).collect();
            assert_eq!(part, expected, "{cfg:?} cut at {cut}");
        }
    }
}

#[test]
fn power_of_two_rescaling_keeps_every_signal() {
    for seed in 0..20 {
        let closes = random_walk(seed, 400, 2e-3);
        let s = series(closes.clone());
        let doubled = series(closes.iter().map(|x| x * 2.0).collect());
        let halved = series(closes.iter().map(|x| x * 0.5).collect());
        for cfg in configs() {
            let key = |v: Vec<Signal>| -> Vec<(usize, Action, Direction, bool)> {
                v.into_iter()
                    .map(|x| (x.index, x.action, x.direction, x.forced))
                    .collect()
            };
            let base = key(run_detector(&s, &cfg).unwrap());
            assert_eq!(base, key(run_detector(&doubled, &cfg).unwrap()));
            assert_eq!(base, key(run_detector(&halved, &cfg).unwrap()));
        }
    }
}

#[test]
fn shifting_prices_keeps_every_signal() {
    for seed in 0..20 {
        let closes = random_walk(seed + 40, 400, 2e-3);
        let s = series(closes.clone());
        let shifted = series(closes.iter().map(|x| x + 0.75).collect());
        for cfg in configs() {
            let key = |v: Vec<Signal>| -> Vec<(usize, Action, Direction)> {
                v.into_iter()
                    .map(|x| (x.index, x.action, x.direction))
                    .collect()
            };
            assert_eq!(
                key(run_detector(&s, &cfg).unwrap()),
                key(run_detector(&shifted, &cfg).unwrap()),
                "seed {seed} {cfg:?}"
            );
        }
    }
}

/// Replays the scan with the standalone rule checks, which recompute every statistic.
fn replay(p: &[f64], cfg: &StrategyConfig) -> Vec<(usize, Action, Direction)> {
    let mut out = Vec::new();
    let mut held: Option<Direction> = None;
    for i in cfg.first_valid_bar()..p.len() {
        match held {
            None => {
                let entry = match cfg.variant {
                    Variant::Sld => sld_entry_check(p, i, cfg).unwrap(),
                    Variant::Pc => pc_entry_check(p, i, cfg).unwrap(),
                };
                if let Some(d) = entry {
                    out.push((i, Action::Open, d));
                    held = Some(d);
                }
            }
            Some(d) => {
                let exit = match cfg.variant {
                    Variant::Sld => sld_exit_check(p, i, cfg, d).unwrap(),
                    Variant::Pc => pc_exit_check(p, i, cfg, d).unwrap(),
                };
                if exit {
                    out.push((i, Action::Close, d));
                    held = None;
                }
            }
        }
    }
    if let Some(d) = held {
        out.push((p.len() - 1, Action::Close, d));
    }
    out
}

#[test]
fn table_scan_equals_standalone_checks() {
    for seed in 0..10 {
        let s = series(random_walk(seed + 500, 300, 2e-3));
        for cfg in configs() {
            let scanned: Vec<_> = run_detector(&s, &cfg)
                .unwrap()
                .into_iter()
                .map(|x| (x.index, x.action, x.direction))
                .collect();
            assert_eq!(scanned, replay(s.closes(), &cfg), "seed {seed} {cfg:?}");
        }
    }
}

#[test]
fn signal_diagnostics_describe_their_bar() {
    let s = series(random_walk(4, 300, 2e-3));
    let cfg = StrategyConfig::reference(Variant::Pc);
    for sig in run_detector(&s, &cfg).unwrap() {
        assert_eq!(sig.diagnostics.index, sig.index);
        if sig.action == Action::Open {
            let z = (s.closes()[sig.index] - sig.diagnostics.mu) / sig.diagnostics.sigma;
            assert!(z.abs() > cfg.band);
            assert!(sig.diagnostics.acf.unwrap() < cfg.acf_star);
            assert_eq!(sig.direction == Direction::Long, z > 0.0);
        }
    }
}

#[test]
fn sld_opens_inside_band_on_the_side_of_the_deviation() {
    let s = series(random_walk(8, 600, 2e-3));
    let cfg = StrategyConfig::reference(Variant::Sld);
    let signals = run_detector(&s, &cfg).unwrap();
    assert!(signals.iter().any(|x| x.action == Action::Open));
    for sig in signals.iter().filter(|x| x.action == Action::Open) {
        let d = sig.diagnostics;
        let dev = s.closes()[sig.index] - d.mu;
        assert!(dev.abs() < cfg.band * d.sigma);
        assert_eq!(sig.direction == Direction::Long, dev > 0.0);
    }
}

#[test]
fn too_short_series_is_rejected() {
    let cfg = StrategyConfig::reference(Variant::Pc);
    let s = series(random_walk(1, cfg.first_valid_bar(), 1e-3));
    assert!(run_detector(&s, &cfg).is_err());
}
