//! Deterministic numeric text output.

/// Significant digits used for every derived numeric field in exported files.
pub const SIG_DIGITS: usize = 9;

/// Formats `x` rounded to [`SIG_DIGITS`] significant digits.
///
/// Rounding goes through the scientific representation, so the result is
/// identical on every platform. Magnitudes below 1e-4 or from 1e15 up use
/// exponent notation (`2.5e-7`). Non-finite values print as `inf`, `-inf`, `nan`.
pub fn sig(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let rounded: f64 = format!("{:.*e}", SIG_DIGITS - 1, x)
        .parse()
        .expect("scientific output parses");
    // avoid "-0"
    if rounded == 0.0 {
        return "0".to_string();
    }
    let magnitude = rounded.abs();
    if !(1e-4..1e15).contains(&magnitude) {
        return format!("{rounded:e}");
    }
    format!("{rounded}")
}

/// Like [`sig`] but `None` renders as an empty field.
pub fn sig_opt(x: Option<f64>) -> String {
    x.map(sig).unwrap_or_default()
}
