//! Naive reference implementations and fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regimeshift::backtest::CostModel;
use regimeshift::{Action, Direction, PriceSeries, Signal, WindowDiagnostics};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Multiplicative random walk from 1.5 with uniform steps of width `2 * step`.
pub fn random_walk(seed: u64, len: usize, step: f64) -> Vec<f64> {
    let mut r = rng(seed);
    let mut p = 1.5;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(p);
        p *= 1.0 + r.random_range(-step..step);
    }
    out
}

pub fn series(closes: Vec<f64>) -> PriceSeries {
    PriceSeries::from_closes("TEST", closes).unwrap()
}

/// `|a - b| <= rel * max(|a|, |b|) + abs`.
pub fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}

pub fn oracle_mean_std(w: &[f64]) -> (f64, f64) {
    let n = w.len() as f64;
    let mut sum = 0.0;
    for x in w {
        sum += x;
    }
    let mean = sum / n;
    let mut ss = 0.0;
    for x in w {
        ss += (x - mean).powi(2);
    }
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Pearson correlation of the recent window against the window before it.
pub fn oracle_acf(p: &[f64], i: usize, n: usize) -> Option<f64> {
    let a: Vec<f64> = (0..n).map(|k| p[i - n + 1 + k]).collect();
    let b: Vec<f64> = (0..n).map(|k| p[i - 2 * n + 1 + k]).collect();
    let (ma, sa) = oracle_mean_std(&a);
    let (mb, sb) = oracle_mean_std(&b);
    if sa == 0.0 || sb == 0.0 {
        return None;
    }
    let mut cov = 0.0;
    for k in 0..n {
        cov += (a[k] - ma) * (b[k] - mb);
    }
    Some(cov / (n as f64 - 1.0) / (sa * sb))
}

pub fn oracle_diffusion(p: &[f64], i: usize, n: usize) -> f64 {
    let mut sum = 0.0;
    for j in (i - n)..=i {
        sum += (p[j] - p[i - n]).powi(2);
    }
    sum / (n * n) as f64
}

/// Triple loop: for each `j`, average over start points of the summed squared displacement.
pub fn oracle_msd_curve(p: &[f64], i: usize, n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for j in (i + 1 - n)..=i {
        let mut total = 0.0;
        let mut count = 0;
        for j0 in (j - 2 * n)..=(j - n) {
            let mut s = 0.0;
            for k in j0..=j {
                s += (p[j] - p[k]).powi(2);
            }
            total += s;
            count += 1;
        }
        out.push(total / count as f64);
    }
    out
}

/// Least-squares slope of `ys` against `i + 1 - n, ..., i`.
pub fn oracle_slope(i: usize, ys: &[f64]) -> f64 {
    let n = ys.len();
    let xs: Vec<f64> = (0..n).map(|k| (i + 1 - n + k) as f64).collect();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for k in 0..n {
        sxy += (xs[k] - mx) * (ys[k] - my);
        sxx += (xs[k] - mx) * (xs[k] - mx);
    }
    sxy / sxx
}

fn blank(index: usize) -> WindowDiagnostics {
    WindowDiagnostics {
        index,
        mu: 0.0,
        sigma: 0.0,
        acf: None,
        diffusion: 0.0,
        chi: None,
    }
}

/// Alternating open/close signals at random bars; the last close may be forced.
pub fn random_signals(seed: u64, len: usize) -> Vec<Signal> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    let mut i = r.random_range(0..len / 4);
    while i < len {
        let direction = if r.random_bool(0.5) {
            Direction::Long
        } else {
            Direction::Short
        };
        out.push(Signal {
            index: i,
            action: Action::Open,
            direction,
            forced: false,
            diagnostics: blank(i),
        });
        let exit = i + r.random_range(1..40);
        let (exit, forced) = if exit >= len {
            (len - 1, true)
        } else {
            (exit, false)
        };
        out.push(Signal {
            index: exit,
            action: Action::Close,
            direction,
            forced,
            diagnostics: blank(exit),
        });
        i = exit + 1 + r.random_range(0..20);
    }
    out
}

/// `(entry, exit, nights, pnl_pips, yield)` per round trip, by hand.
pub fn oracle_pnl(
    closes: &[f64],
    signals: &[Signal],
    c: &CostModel,
) -> Vec<(usize, usize, u64, f64, f64)> {
    let mut out = Vec::new();
    for pair in signals.chunks(2) {
        let (open, shut) = (&pair[0], &pair[1]);
        if shut.forced && shut.index == open.index {
            continue;
        }
        let held = shut.index - open.index;
        let nights = held / c.bars_per_day;
        let (sign, swap) = match open.direction {
            Direction::Long => (1.0, c.swap_long_pips_per_night),
            Direction::Short => (-1.0, c.swap_short_pips_per_night),
        };
        let pnl = sign * (closes[shut.index] - closes[open.index]) / c.pip
            - c.spread_pips
            - nights as f64 * swap;
        let money = pnl * (c.notional * c.pip);
        out.push((
            open.index,
            shut.index,
            nights as u64,
            pnl,
            money / c.notional,
        ));
    }
    out
}
