//! Half-turn disambiguation by whitened (phase) correlation in BEV space.
//!
//! Magnitude spectra of sinogram rows are symmetric under a half turn, so the
//! correlation peak at `α` always has an equally good twin at `α + 180°`. Both
//! candidates are scored by rotating the query image and phase-correlating it
//! against the reference; the translation left between them is absorbed by the
//! correlation.
//!
//! A half turn about the grid center is index negation modulo `S`, whose
//! spectrum is the complex conjugate. One rotation and one packed forward
//! transform therefore serve both candidates.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::angle::normalize_deg;
use crate::bev::{Interp, Raster};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisambiguationConfig {
    /// Images are sum-pooled by this factor before correlation.
    pub pool: usize,
    /// Both peaks below this value flag the decision as low confidence.
    pub peak_floor: f64,
}

impl Default for DisambiguationConfig {
    fn default() -> Self {
        DisambiguationConfig {
            pool: 2,
            peak_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfTurnDecision {
    pub chosen_deg: f64,
    /// Phase-correlation peaks for `[α, α + 180°]`.
    pub peaks: [f64; 2],
    pub low_confidence: bool,
}

/// Square 2-D FFT by rows, transpose, rows.
pub struct Fft2<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> Fft2<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn forward(&self, data: &mut [Complex<T>]) {
        self.run(data, &self.forward);
    }

    /// Unnormalized inverse transform.
    pub fn inverse(&self, data: &mut [Complex<T>]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex<T>], fft: &Arc<dyn Fft<T>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n);
        let rows = |buf: &mut [Complex<T>]| {
            buf.par_chunks_mut(n).for_each_init(
                || vec![Complex::default(); fft.get_inplace_scratch_len()],
                |scratch, row| fft.process_with_scratch(row, scratch),
            );
        };
        rows(data);
        transpose(data, n);
        rows(data);
        transpose(data, n);
    }
}

fn transpose<T: Copy>(data: &mut [T], n: usize) {
    const BLOCK: usize = 16;
    for bi in (0..n).step_by(BLOCK) {
        for bj in (bi..n).step_by(BLOCK) {
            for i in bi..(bi + BLOCK).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + BLOCK).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Scores the two half-turn candidates for aligning `query` onto `reference`.
pub struct HalfTurnResolver<T: Real> {
    config: DisambiguationConfig,
    fft: Fft2<T>,
}

impl<T: Real> HalfTurnResolver<T> {
    pub fn new(config: DisambiguationConfig, image_size: usize) -> Result<Self> {
        if config.pool == 0 || !image_size.is_multiple_of(config.pool) || !(image_size / config.pool).is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "pool factor {} must divide the image size {image_size} into an even size",
                config.pool
            )));
        }
        Ok(HalfTurnResolver {
            config,
            fft: Fft2::new(image_size / config.pool),
        })
    }

    pub fn config(&self) -> &DisambiguationConfig {
        &self.config
    }

    /// Picks between `alpha_deg` and `alpha_deg + 180°` such that
    /// `reference(u) ≈ query(R(chosen) u + t)` for some translation `t`.
    pub fn resolve(&self, query: &Raster<T>, reference: &Raster<T>, alpha_deg: f64) -> Result<HalfTurnDecision> {
        if query.size() != reference.size() || query.size() != self.fft.size() * self.config.pool {
            return Err(Error::ShapeMismatch(format!(
                "images are {} and {} pixels wide, resolver expects {}",
                query.size(),
                reference.size(),
                self.fft.size() * self.config.pool
            )));
        }
        let q = query.pooled(self.config.pool);
        let p = reference.pooled(self.config.pool);
        let rotated = q.transformed(alpha_deg, (0.0, 0.0), Interp::Nearest);
        let peaks = self.twin_peaks(&p, &rotated);
        let low_confidence = peaks.iter().all(|&v| v < self.config.peak_floor);
        let chosen_deg = if !low_confidence && peaks[1] > peaks[0] {
            normalize_deg(alpha_deg + 180.0)
        } else {
            normalize_deg(alpha_deg)
        };
        Ok(HalfTurnDecision {
            chosen_deg,
            peaks,
            low_confidence,
        })
    }

    /// Phase-correlation peaks of `reference` against `candidate` and against `candidate` turned by 180°.
    fn twin_peaks(&self, reference: &Raster<T>, candidate: &Raster<T>) -> [f64; 2] {
        let n = self.fft.size();
        let mut z: Vec<Complex<T>> = reference
            .data()
            .iter()
            .zip(candidate.data())
            .map(|(&re, &im)| Complex::new(re, im))
            .collect();
        self.fft.forward(&mut z);

        let half = T::of(0.5);
        let mut w = vec![Complex::<T>::default(); n * n];
        let mut mags = vec![T::zero(); n * n];
        let mut largest = T::zero();
        for ky in 0..n {
            let my = (n - ky) % n;
            for kx in 0..n {
                let mx = (n - kx) % n;
                let zk = z[ky * n + kx];
                let zm = z[my * n + mx].conj();
                let p = (zk + zm) * half;
                // R = (zk - zm) / 2i
                let r = (zk - zm) * Complex::new(T::zero(), -half);
                let direct = p * r.conj();
                let turned = p * r;
                let m = direct.norm_sqr().sqrt();
                largest = largest.max(m);
                // both spectra are Hermitian, so their inverses are real: pack as d + i t
                w[ky * n + kx] = Complex::new(direct.re - turned.im, direct.im + turned.re);
                mags[ky * n + kx] = m;
            }
        }
        let floor = largest * T::of(1e-12);
        for (v, &m) in w.iter_mut().zip(&mags) {
            *v = if m > floor && m > T::zero() { *v * m.recip() } else { Complex::default() };
        }
        self.fft.inverse(&mut w);
        let scale = (n * n) as f64;
        let (mut a, mut b) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &w {
            a = a.max(v.re.to_f64_lossy());
            b = b.max(v.im.to_f64_lossy());
        }
        [a / scale, b / scale]
    }
}

/// One-shot wrapper: chooses between `alpha_deg` and `alpha_deg + 180°`.
pub fn disambiguate_halfturn<T: Real>(
    query: &Raster<T>,
    reference: &Raster<T>,
    alpha_deg: f64,
    config: &DisambiguationConfig,
) -> Result<HalfTurnDecision> {
    HalfTurnResolver::new(*config, query.size())?.resolve(query, reference, alpha_deg)
}
