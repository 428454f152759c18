//! Ordinary least squares on one regressor.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// `1 - SS_res / SS_tot`, taken as 1 when `SS_tot == 0`.
    pub r_squared: f64,
}

/// Fits `y = slope * x + intercept`.
///
/// Sums are centred on the sample means before accumulating.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::param(format!(
            "abscissa has {} points, ordinate {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateAbscissa);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = x
            .iter()
            .zip(y)
            .map(|(&xi, &yi)| {
                let e = yi - (slope * xi + intercept);
                e * e
            })
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let fit = ols(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-15);
        assert!((fit.intercept - 5.0).abs() < 1e-14);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn hand_computed_slope() {
        // Sxy = 1.5 - 0.5*... : x̄ = 2.5, ȳ = 2; Σdx·dy = 3, Σdx² = 5
        let fit = ols(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 2.0, 3.0]).unwrap();
        assert!((fit.slope - 0.6).abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            ols(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::DegenerateAbscissa)
        ));
        assert!(matches!(
            ols(&[1.0], &[1.0]),
            Err(Error::TooFewPoints { .. })
        ));
        assert!(ols(&[1.0, 2.0], &[1.0]).is_err());
        assert_eq!(ols(&[1.0, 2.0, 3.0], &[5.0; 3]).unwrap().r_squared, 1.0);
    }
}
