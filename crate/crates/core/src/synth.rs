//! Seeded synthetic price series with known ground truth.
//!
//! Every model produces a latent path `x_t` (with `x_0 = 0`) that is mapped to
//! positive prices `1.5 · exp(volatility · x_t)`. Latent increments have unit
//! variance per bar, so `volatility` is the per-bar log-price scale.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::marketdata::PriceSeries;
use crate::rollingstats::mean_square_displacement;

/// Price level of `x_t = 0`.
pub const BASE_PRICE: f64 = 1.5;

/// Bars of shrinking dispersion planted before a compression jump.
pub const COMPRESSION_BARS: usize = 40;

/// Bars over which a variance ramp grows after its start index.
pub const RAMP_BARS: usize = 40;

/// Bars of quiet history required before any planted pattern.
const MIN_LEAD_BARS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    /// Dispersion grows steadily from the transition index onward.
    VarianceRamp,
    /// Dispersion collapses before a single jump at the transition index.
    CompressionJump,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynthModel {
    /// Fractional Brownian motion with the given Hurst exponent.
    Fbm { hurst: f64 },
    /// Discrete Ornstein-Uhlenbeck pull toward the base price.
    MeanRevert { reversion_rate: f64 },
    /// Mean-reverting background with a planted precursor pattern.
    PlantedTransition {
        kind: TransitionKind,
        transition_index: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub model: SynthModel,
    pub length: usize,
    pub seed: u64,
    pub volatility: f64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length < 16 {
            return Err(Error::param(format!(
                "length must be at least 16, got {}",
                self.length
            )));
        }
        if !(self.volatility > 0.0 && self.volatility.is_finite()) {
            return Err(Error::param(format!(
                "volatility must be positive, got {}",
                self.volatility
            )));
        }
        match self.model {
            SynthModel::Fbm { hurst } if !(hurst > 0.0 && hurst < 1.0) => Err(Error::param(
                format!("hurst must lie in (0, 1), got {hurst}"),
            )),
            SynthModel::MeanRevert { reversion_rate }
                if !(reversion_rate > 0.0 && reversion_rate < 1.0) =>
            {
                Err(Error::param(format!(
                    "reversion rate must lie in (0, 1), got {reversion_rate}"
                )))
            }
            SynthModel::PlantedTransition {
                kind,
                transition_index,
            } => {
                let lead = match kind {
                    TransitionKind::CompressionJump => COMPRESSION_BARS + MIN_LEAD_BARS,
                    TransitionKind::VarianceRamp => MIN_LEAD_BARS,
                };
                if transition_index < lead || transition_index + 1 >= self.length {
                    Err(Error::param(format!(
                        "transition index {transition_index} needs {lead} bars before it \
                         and at least one after, in a series of {}",
                        self.length
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Builds the series described by `spec`; identical specs give identical output.
pub fn generate(spec: &SynthSpec) -> Result<PriceSeries> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let latent = match spec.model {
        SynthModel::Fbm { hurst } => cumulative(&fgn(spec.length - 1, hurst, &mut rng)),
        SynthModel::MeanRevert { reversion_rate } => {
            mean_revert(spec.length, reversion_rate, &mut rng)
        }
        SynthModel::PlantedTransition {
            kind,
            transition_index,
        } => planted(spec.length, kind, transition_index, &mut rng),
    };
    let closes = latent
        .iter()
        .map(|x| BASE_PRICE * (spec.volatility * x).exp())
        .collect();
    PriceSeries::from_closes(format!("synth-{}", spec.seed), closes)
}

/// Mean over `t` of `(p_{t+lag} - p_t)²`.
pub fn msd_of(series: &PriceSeries, lag: usize) -> Result<f64> {
    if lag < 1 {
        return Err(Error::param("lag must be at least 1"));
    }
    if series.len() <= 4 * lag {
        return Err(Error::TooFewPoints {
            required: 4 * lag + 1,
            got: series.len(),
        });
    }
    Ok(mean_square_displacement(series.closes(), lag))
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn cumulative(increments: &[f64]) -> Vec<f64> {
    std::iter::once(0.0)
        .chain(increments.iter().scan(0.0, |x, dx| {
            *x += dx;
            Some(*x)
        }))
        .collect()
}

/// Autocovariance of unit-variance fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(k: usize, hurst: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// `n` samples of unit-variance fractional Gaussian noise.
///
/// Circulant embedding (Davies-Harte): the covariance is embedded in a
/// circulant matrix of size `2m`, `m ≥ n` a power of two, whose eigenvalues are
/// non-negative for fGn, which makes the samples exact rather than approximate.
fn fgn(n: usize, hurst: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let m = n.next_power_of_two().max(2);
    let size = 2 * m;
    let mut row: Vec<Complex<f64>> = (0..size)
        .map(|k| {
            let lag = if k <= m { k } else { size - k };
            Complex::new(fgn_autocovariance(lag, hurst), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(size);
    fft.process(&mut row);

    let mut w: Vec<Complex<f64>> = row
        .iter()
        .map(|lambda| {
            // rounding can leave tiny negative eigenvalues
            let scale = (lambda.re.max(0.0) / size as f64).sqrt();
            let z = Complex::new(normal(rng), normal(rng));
            z * scale
        })
        .collect();
    fft.process(&mut w);
    w.iter().take(n).map(|c| c.re).collect()
}

fn mean_revert(length: usize, rate: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = Vec::with_capacity(length);
    let mut level = 0.0;
    x.push(level);
    for _ in 1..length {
        level += -rate * level + normal(rng);
        x.push(level);
    }
    x
}

/// Background reversion rate of the planted-transition models.
const BACKGROUND_REVERSION: f64 = 0.5;

/// Dispersion reached at the end of the compression, relative to the background.
const COMPRESSION_FLOOR: f64 = 0.01;

/// Latent jump at the transition bar, in background standard deviations.
const JUMP_SIZE: f64 = 8.0;

fn planted(length: usize, kind: TransitionKind, at: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = Vec::with_capacity(length);
    x.push(0.0);
    match kind {
        TransitionKind::CompressionJump => {
            let squeeze_from = at - COMPRESSION_BARS;
            let mut anchor = 0.0;
            for t in 1..length {
                let prev = x[t - 1];
                let next = if t < squeeze_from {
                    prev - BACKGROUND_REVERSION * (prev - anchor) + normal(rng)
                } else if t < at {
                    // memoryless scatter around the anchor, shrinking geometrically
                    let progress = (t - squeeze_from + 1) as f64 / COMPRESSION_BARS as f64;
                    anchor + COMPRESSION_FLOOR.powf(progress) * normal(rng)
                } else if t == at {
                    anchor = prev + JUMP_SIZE;
                    anchor
                } else {
                    prev - BACKGROUND_REVERSION * (prev - anchor) + normal(rng)
                };
                x.push(next);
            }
        }
        TransitionKind::VarianceRamp => {
            for t in 1..length {
                let prev = x[t - 1];
                let scale = if t < at {
                    1.0
                } else {
                    1.0 + 3.0 * ((t - at) as f64 / RAMP_BARS as f64).min(1.0)
                };
                x.push(prev - BACKGROUND_REVERSION * prev + scale * normal(rng));
            }
        }
    }
    x
}
