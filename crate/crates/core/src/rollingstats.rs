//! Per-bar window statistics consumed by the detectors.
//!
//! All functions take the raw close slice and a bar index `i`; windows end at
//! `i` inclusive and look strictly backwards.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numfmt::{sig, sig_opt};
use crate::regression::ols;

/// Snapshot of every statistic at one bar for window length `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowDiagnostics {
    pub index: usize,
    /// Mean of the last `N` closes.
    pub mu: f64,
    /// Sample standard deviation of the last `N` closes.
    pub sigma: f64,
    /// Lagged-window correlation; `None` when either window is flat.
    pub acf: Option<f64>,
    /// Diffusion coefficient (price² per bar).
    pub diffusion: f64,
    /// MSD regression slope; `None` before `3N` bars of history.
    pub chi: Option<f64>,
}

/// Averaged mean-square displacement `f̄(j)` for the `N` bars ending at `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MsdCurve {
    pub j_values: Vec<usize>,
    pub f_values: Vec<f64>,
}

fn require(i: usize, required: usize, len: usize) -> Result<()> {
    if i < required {
        return Err(Error::InsufficientHistory { index: i, required });
    }
    if i >= len {
        return Err(Error::param(format!(
            "bar {i} outside series of {len} bars"
        )));
    }
    Ok(())
}

fn require_window(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::param(format!(
            "window length must be at least 2, got {n}"
        )));
    }
    Ok(())
}

fn is_flat(xs: &[f64]) -> bool {
    xs.iter().all(|&x| x == xs[0])
}

/// Mean and sample standard deviation (`1/(N-1)`) of `prices`.
pub fn window_mean_std(prices: &[f64]) -> Result<(f64, f64)> {
    if prices.len() < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            got: prices.len(),
        });
    }
    let n = prices.len() as f64;
    let mu = prices.iter().sum::<f64>() / n;
    if is_flat(prices) {
        return Ok((prices[0], 0.0));
    }
    let ss: f64 = prices.iter().map(|&p| (p - mu) * (p - mu)).sum();
    Ok((mu, (ss / (n - 1.0)).sqrt()))
}

/// Pearson correlation of `closes[i-N+1..=i]` against `closes[i-2N+1..=i-N]`.
///
/// `Ok(None)` marks the undefined case where either window has zero variance.
pub fn acf_lagged(prices: &[f64], i: usize, n: usize) -> Result<Option<f64>> {
    require_window(n)?;
    require(i, 2 * n - 1, prices.len())?;
    let recent = &prices[i + 1 - n..=i];
    let lagged = &prices[i + 1 - 2 * n..=i - n];
    Ok(pearson(recent, lagged))
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if is_flat(a) || is_flat(b) {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// `D_i = (1/N²) Σ_{j=i-N}^{i} (p_j - p_{i-N})²`.
pub fn diffusion(prices: &[f64], i: usize, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("window length must be positive"));
    }
    require(i, n, prices.len())?;
    let p0 = prices[i - n];
    let sum: f64 = prices[i - n..=i].iter().map(|&p| (p - p0) * (p - p0)).sum();
    Ok(sum / (n * n) as f64)
}

/// Change of the diffusion coefficient from bar `i - 1` to bar `i`, and its sign.
pub fn diffusion_trend(prices: &[f64], i: usize, n: usize) -> Result<(f64, i8)> {
    require(i, n + 1, prices.len())?;
    let delta = diffusion(prices, i, n)? - diffusion(prices, i - 1, n)?;
    let sign = if delta > 0.0 {
        1
    } else if delta < 0.0 {
        -1
    } else {
        0
    };
    Ok((delta, sign))
}

/// For each `j` in the `N` bars ending at `i`, the mean over
/// `j0 ∈ [j-2N, j-N]` of `Σ_{k=j0}^{j} (p_j - p_k)²`.
pub fn msd_curve(prices: &[f64], i: usize, n: usize) -> Result<MsdCurve> {
    require_window(n)?;
    require(i, 3 * n, prices.len())?;
    let mut j_values = Vec::with_capacity(n);
    let mut f_values = Vec::with_capacity(n);
    for j in i + 1 - n..=i {
        let pj = prices[j];
        // suffix sums over k = j0..=j, grown downward from k = j
        let mut suffix = 0.0;
        let mut total = 0.0;
        for k in (j - 2 * n..=j).rev() {
            suffix += (pj - prices[k]) * (pj - prices[k]);
            if k <= j - n {
                total += suffix;
            }
        }
        j_values.push(j);
        f_values.push(total / (n + 1) as f64);
    }
    Ok(MsdCurve { j_values, f_values })
}

/// OLS slope `χ` of `f̄` against `j`.
pub fn msd_slope(curve: &MsdCurve) -> Result<f64> {
    let x: Vec<f64> = curve.j_values.iter().map(|&j| j as f64).collect();
    Ok(ols(&x, &curve.f_values)?.slope)
}

/// Mean over `t` of `(p_{t+lag} - p_t)²`.
pub(crate) fn mean_square_displacement(prices: &[f64], lag: usize) -> f64 {
    let count = prices.len() - lag;
    let sum: f64 = prices
        .iter()
        .zip(&prices[lag..])
        .map(|(&a, &b)| (b - a) * (b - a))
        .sum();
    sum / count as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct HurstEstimate {
    /// Half the log-log slope, unclamped.
    pub raw: f64,
    /// `raw` clamped into `[0, 1]`.
    pub hurst: f64,
    pub lags: Vec<usize>,
    pub msd: Vec<f64>,
}

/// Variogram Hurst estimate over dyadic lags `min_lag, 2·min_lag, … ≤ max_lag`.
pub fn hurst_estimate(prices: &[f64], min_lag: usize, max_lag: usize) -> Result<HurstEstimate> {
    if min_lag < 1 || min_lag >= max_lag {
        return Err(Error::param(format!(
            "need 1 <= min_lag < max_lag, got {min_lag}..{max_lag}"
        )));
    }
    if prices.len() < 4 * max_lag {
        return Err(Error::TooFewPoints {
            required: 4 * max_lag,
            got: prices.len(),
        });
    }
    let lags: Vec<usize> = std::iter::successors(Some(min_lag), |&l| Some(l * 2))
        .take_while(|&l| l <= max_lag)
        .collect();
    if lags.len() < 2 {
        return Err(Error::DegenerateAbscissa);
    }
    let mut msd = Vec::with_capacity(lags.len());
    for &lag in &lags {
        let m = mean_square_displacement(prices, lag);
        if m <= 0.0 {
            return Err(Error::ZeroDisplacement { lag });
        }
        msd.push(m);
    }
    let log_lag: Vec<f64> = lags.iter().map(|&l| (l as f64).ln()).collect();
    let log_msd: Vec<f64> = msd.iter().map(|m| m.ln()).collect();
    let raw = ols(&log_lag, &log_msd)?.slope / 2.0;
    Ok(HurstEstimate {
        raw,
        hurst: raw.clamp(0.0, 1.0),
        lags,
        msd,
    })
}

/// All statistics at bar `i`; `chi` is filled once `i >= 3N`.
pub fn diagnostics_at(prices: &[f64], i: usize, n: usize) -> Result<WindowDiagnostics> {
    require_window(n)?;
    require(i, 2 * n - 1, prices.len())?;
    let (mu, sigma) = window_mean_std(&prices[i + 1 - n..=i])?;
    let chi = if i >= 3 * n {
        Some(msd_slope(&msd_curve(prices, i, n)?)?)
    } else {
        None
    };
    Ok(WindowDiagnostics {
        index: i,
        mu,
        sigma,
        acf: acf_lagged(prices, i, n)?,
        diffusion: diffusion(prices, i, n)?,
        chi,
    })
}

/// Statistics for every bar of a series at one window length.
///
/// Bars without enough history hold `None` in the affected column.
#[derive(Debug, Clone)]
pub struct DiagnosticsTable {
    n: usize,
    mu: Vec<Option<f64>>,
    sigma: Vec<Option<f64>>,
    acf: Vec<Option<f64>>,
    diffusion: Vec<Option<f64>>,
    chi: Vec<Option<f64>>,
}

impl DiagnosticsTable {
    pub fn compute(prices: &[f64], n: usize) -> Result<Self> {
        require_window(n)?;
        let rows: Vec<_> = (0..prices.len())
            .into_par_iter()
            .map(|i| {
                let band = (i + 1 >= n)
                    .then(|| window_mean_std(&prices[i + 1 - n..=i]).ok())
                    .flatten();
                let acf = (i + 1 >= 2 * n)
                    .then(|| acf_lagged(prices, i, n).ok().flatten())
                    .flatten();
                let diff = (i >= n).then(|| diffusion(prices, i, n).ok()).flatten();
                let chi = (i >= 3 * n)
                    .then(|| msd_curve(prices, i, n).and_then(|c| msd_slope(&c)).ok())
                    .flatten();
                (band, acf, diff, chi)
            })
            .collect();
        let mut table = Self {
            n,
            mu: Vec::with_capacity(rows.len()),
            sigma: Vec::with_capacity(rows.len()),
            acf: Vec::with_capacity(rows.len()),
            diffusion: Vec::with_capacity(rows.len()),
            chi: Vec::with_capacity(rows.len()),
        };
        for (band, acf, diff, chi) in rows {
            table.mu.push(band.map(|b| b.0));
            table.sigma.push(band.map(|b| b.1));
            table.acf.push(acf);
            table.diffusion.push(diff);
            table.chi.push(chi);
        }
        Ok(table)
    }

    pub fn window(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn mu(&self, i: usize) -> Option<f64> {
        self.mu.get(i).copied().flatten()
    }

    pub fn sigma(&self, i: usize) -> Option<f64> {
        self.sigma.get(i).copied().flatten()
    }

    pub fn acf(&self, i: usize) -> Option<f64> {
        self.acf.get(i).copied().flatten()
    }

    pub fn diffusion(&self, i: usize) -> Option<f64> {
        self.diffusion.get(i).copied().flatten()
    }

    pub fn chi(&self, i: usize) -> Option<f64> {
        self.chi.get(i).copied().flatten()
    }

    /// Snapshot at bar `i` once `i >= 2N - 1`.
    pub fn diagnostics(&self, i: usize) -> Option<WindowDiagnostics> {
        if i + 1 < 2 * self.n {
            return None;
        }
        Some(WindowDiagnostics {
            index: i,
            mu: self.mu(i)?,
            sigma: self.sigma(i)?,
            acf: self.acf(i),
            diffusion: self.diffusion(i)?,
            chi: self.chi(i),
        })
    }

    /// `index,mu,sigma,acf,diffusion,chi`; undefined values are empty fields.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["index", "mu", "sigma", "acf", "diffusion", "chi"])?;
        for i in 0..self.len() {
            if let Some(d) = self.diagnostics(i) {
                out.write_record([
                    i.to_string(),
                    sig(d.mu),
                    sig(d.sigma),
                    sig_opt(d.acf),
                    sig(d.diffusion),
                    sig_opt(d.chi),
                ])?;
            }
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}
