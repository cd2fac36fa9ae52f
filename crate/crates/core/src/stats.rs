//! Aggregate heading-error statistics.

use serde::Serialize;

use crate::error::{Error, Result};

pub const THRESHOLDS_DEG: [f64; 3] = [1.0, 3.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorStats {
    /// Fraction of errors strictly below 1°.
    pub frac_1deg: f64,
    pub frac_3deg: f64,
    pub frac_5deg: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub n: usize,
}

impl ErrorStats {
    /// Statistics over angular errors in degrees. Empty input is an error.
    pub fn from_errors(errors: &[f64]) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::InvalidArgument("no errors to summarize".into()));
        }
        if let Some(bad) = errors.iter().find(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite error value {bad}")));
        }
        let mut sorted = errors.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let frac = |t: f64| sorted.partition_point(|&e| e < t) as f64 / n as f64;
        Ok(ErrorStats {
            frac_1deg: frac(THRESHOLDS_DEG[0]),
            frac_3deg: frac(THRESHOLDS_DEG[1]),
            frac_5deg: frac(THRESHOLDS_DEG[2]),
            q25: quantile_sorted(&sorted, 0.25),
            q50: quantile_sorted(&sorted, 0.50),
            q75: quantile_sorted(&sorted, 0.75),
            n,
        })
    }
}

/// Quantile by linear interpolation between order statistics at position `q * (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, 0.5)
}
