//! Circular cross-correlation of descriptors along the angle axis.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::angle::normalize_deg;
use crate::descriptor::InvariantDescriptor;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Scores over every candidate heading shift plus the peak bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationResult<T> {
    /// `scores[a] = Σ_i <q_i, p_{(i - a) mod N}>`.
    pub scores: Vec<T>,
    /// Lowest index among the maximal scores.
    pub best_bin: usize,
    pub best_angle_deg: f64,
    pub refined_angle_deg: Option<f64>,
    /// `best_angle_deg` and its half-turn twin; magnitude spectra cannot tell them apart.
    pub ambiguity_pair: [f64; 2],
    /// The member of `ambiguity_pair` kept after disambiguation.
    pub chosen_deg: f64,
    /// Peak over the strongest competing local peak, excluding the peak's
    /// immediate neighbours and the twin neighbourhood.
    pub confidence: f64,
}

impl<T: Real> CorrelationResult<T> {
    pub fn deg_per_bin(&self) -> f64 {
        360.0 / self.scores.len() as f64
    }

    /// Builds the bookkeeping for a raw score vector.
    pub fn from_scores(scores: Vec<T>) -> Self {
        let n = scores.len();
        let best_bin = argmax(&scores);
        let deg_per_bin = 360.0 / n as f64;
        let best_angle_deg = best_bin as f64 * deg_per_bin;
        let confidence = peak_ratio(&scores, best_bin);
        CorrelationResult {
            scores,
            best_bin,
            best_angle_deg,
            refined_angle_deg: None,
            ambiguity_pair: [best_angle_deg, normalize_deg(best_angle_deg + 180.0)],
            chosen_deg: best_angle_deg,
            confidence,
        }
    }
}

fn argmax<T: Real>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn circular_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

fn peak_ratio<T: Real>(scores: &[T], best: usize) -> f64 {
    let n = scores.len();
    let twin = 2 * best + n; // twice the twin position, to handle odd n
    let excluded = |j: usize| {
        let near_twin = {
            let d = (2 * j + 2 * n - twin % (2 * n)) % (2 * n);
            d.min(2 * n - d) <= 2
        };
        circular_distance(j, best, n) <= 1 || near_twin
    };
    let at = |j: usize| scores[j % n].to_f64_lossy();
    let mut local = f64::NEG_INFINITY;
    let mut any = f64::NEG_INFINITY;
    for j in (0..n).filter(|&j| !excluded(j)) {
        let v = at(j);
        any = any.max(v);
        if v >= at(j + n - 1) && v >= at(j + 1) {
            local = local.max(v);
        }
    }
    let second = if local.is_finite() { local } else { any };
    let peak = at(best);
    if second > 0.0 {
        peak / second
    } else {
        f64::INFINITY
    }
}

/// FFT-based correlator for descriptors with a fixed number of angle rows.
pub struct Correlator<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> Correlator<T> {
    pub fn new(n_angles: usize) -> Self {
        let mut planner = FftPlanner::new();
        Correlator {
            n: n_angles,
            forward: planner.plan_fft_forward(n_angles),
            inverse: planner.plan_fft_inverse(n_angles),
        }
    }

    /// Scores for all shifts by the correlation theorem, summed over columns in the frequency domain.
    pub fn scores(&self, dq: &InvariantDescriptor<T>, dp: &InvariantDescriptor<T>) -> Result<Vec<T>> {
        if dq.n_rows() != dp.n_rows() || dq.n_cols() != dp.n_cols() {
            return Err(Error::ShapeMismatch(format!(
                "descriptors are {}x{} and {}x{}",
                dq.n_rows(),
                dq.n_cols(),
                dp.n_rows(),
                dp.n_cols()
            )));
        }
        if dq.n_rows() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "correlator planned for {} angles, descriptors have {}",
                self.n,
                dq.n_rows()
            )));
        }
        let n = self.n;
        let cols = dq.n_cols();
        let mut acc = vec![Complex::<T>::default(); n];
        let mut buf = vec![Complex::<T>::default(); n];
        let mut scratch =
            vec![Complex::default(); self.forward.get_inplace_scratch_len().max(self.inverse.get_inplace_scratch_len())];
        let quarter = T::of(0.25);
        // z = q_col + i p_col gives both column spectra from one transform
        for col in 0..cols {
            for (i, z) in buf.iter_mut().enumerate() {
                *z = Complex::new(dq.data()[i * cols + col], dp.data()[i * cols + col]);
            }
            self.forward.process_with_scratch(&mut buf, &mut scratch);
            for k in 0..=n / 2 {
                let z = buf[k];
                let zc = buf[(n - k) % n].conj();
                // Q = (z + zc)/2, P = (z - zc)/(2i), Q conj(P) = (z + zc)(z - zc)^* i / 4
                let prod = (z + zc) * (z - zc).conj() * Complex::new(T::zero(), quarter);
                acc[k] = acc[k] + prod;
            }
        }
        // the scores are real, so the upper half of the spectrum mirrors the lower
        for k in n / 2 + 1..n {
            acc[k] = acc[n - k].conj();
        }
        self.inverse.process_with_scratch(&mut acc, &mut scratch);
        let scale = T::of_usize(n).recip();
        Ok(acc.iter().map(|z| z.re * scale).collect())
    }

    pub fn correlate(&self, dq: &InvariantDescriptor<T>, dp: &InvariantDescriptor<T>) -> Result<CorrelationResult<T>> {
        Ok(CorrelationResult::from_scores(self.scores(dq, dp)?))
    }
}

/// One-shot convenience wrapper around [`Correlator`].
pub fn circular_correlate<T: Real>(
    dq: &InvariantDescriptor<T>,
    dp: &InvariantDescriptor<T>,
) -> Result<CorrelationResult<T>> {
    Correlator::new(dq.n_rows()).correlate(dq, dp)
}

/// Sub-bin peak position from a parabola through the peak and its two circular neighbours.
///
/// Returns degrees in `[0, 360)`; the vertex offset is clamped to half a bin, and
/// a triple that is not strictly concave yields the bin center.
pub fn refine_peak<T: Real>(scores: &[T], bin: usize) -> f64 {
    let n = scores.len();
    assert!(n >= 3, "need at least three scores to refine");
    let deg_per_bin = 360.0 / n as f64;
    let a = scores[(bin + n - 1) % n].to_f64_lossy();
    let b = scores[bin % n].to_f64_lossy();
    let c = scores[(bin + 1) % n].to_f64_lossy();
    let curvature = a - 2.0 * b + c;
    let scale = a.abs().max(b.abs()).max(c.abs());
    let offset = if curvature < -f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
        (0.5 * (a - c) / curvature).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    normalize_deg((bin as f64 + offset) * deg_per_bin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn descriptor(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> InvariantDescriptor<f64> {
        let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        InvariantDescriptor::from_rows(rows, cols, data).unwrap()
    }

    #[test]
    fn autocorrelation_peaks_at_zero() {
        let d = descriptor(36, 5, |i, j| ((i * 7 + j * 3) % 11) as f64);
        let r = circular_correlate(&d, &d).unwrap();
        assert_eq!(r.best_bin, 0);
        assert_eq!(r.ambiguity_pair, [0.0, 180.0]);
    }

    #[test]
    fn rolled_rows_are_found() {
        let d = descriptor(360, 4, |i, j| (((i * 13 + j * 5) % 17) as f64).sqrt() + (i as f64 / 50.0).sin());
        let p = d.roll_rows(30);
        let r = circular_correlate(&d, &p).unwrap();
        assert!(r.best_bin == 30 || r.best_bin == 210, "{}", r.best_bin);
        assert_eq!(r.ambiguity_pair, [30.0, 210.0]);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = descriptor(8, 3, |_, _| 1.0);
        let b = descriptor(8, 4, |_, _| 1.0);
        assert!(matches!(circular_correlate(&a, &b), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn ties_go_to_the_lowest_index() {
        let r = CorrelationResult::from_scores(vec![1.0, 3.0, 2.0, 3.0, 0.0, 1.0]);
        assert_eq!(r.best_bin, 1);
        assert_eq!(r.best_angle_deg, 60.0);
    }

    #[test]
    fn confidence_skips_neighbours_and_twin() {
        let mut scores = vec![1.0; 12];
        scores[2] = 10.0;
        scores[3] = 9.0; // neighbour
        scores[8] = 9.5; // twin
        scores[5] = 4.0;
        let r = CorrelationResult::from_scores(scores);
        assert_eq!(r.best_bin, 2);
        assert!((r.confidence - 2.5).abs() < 1e-12, "{}", r.confidence);
    }

    #[test]
    fn refine_symmetric_and_flat() {
        let scores = [0.0, 1.0, 2.0, 1.0, 0.0, 0.0];
        assert_eq!(refine_peak(&scores, 2), 120.0);
        let flat = [1.0; 8];
        assert_eq!(refine_peak(&flat, 3), 135.0);
    }

    #[test]
    fn refine_wraps_around() {
        let scores = [2.0, 1.5, 0.0, 0.0, 0.0, 1.0];
        // offset +1/6 bin from bin 0 at 60 deg/bin
        assert!((refine_peak(&scores, 0) - 10.0).abs() < 1e-9);
        let scores = [2.0, 1.0, 0.0, 0.0, 0.0, 1.5];
        assert!((refine_peak(&scores, 0) - 350.0).abs() < 1e-9);
    }
}
