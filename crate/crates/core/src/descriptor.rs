//! Translation-invariant descriptor: per-row DFT magnitudes of a sinogram.
//!
//! A translation shifts every sinogram row circularly along the offset axis;
//! the magnitude spectrum of a row does not see that shift, so two descriptors
//! differ only by a roll along the angle axis.

use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::npy;
use crate::radon::Sinogram;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    Raw,
    /// The whole descriptor is scaled to unit Frobenius norm.
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DescriptorConfig {
    /// Drop frequency bin 0, which only carries the (near-constant) row mass.
    pub drop_dc: bool,
    /// Keep bins up to `N_τ / 2` only; the rest mirror them for real rows.
    pub half_spectrum: bool,
    pub normalization: Normalization,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        DescriptorConfig {
            drop_dc: true,
            half_spectrum: true,
            normalization: Normalization::Raw,
        }
    }
}

impl DescriptorConfig {
    /// Frequency bins `[start, end)` retained for rows of length `n`.
    pub fn bins(&self, n: usize) -> (usize, usize) {
        let start = self.drop_dc as usize;
        let end = if self.half_spectrum { n / 2 + 1 } else { n };
        (start, end.max(start))
    }
}

/// Non-negative `N_θ x N_f` matrix, row-major by angle.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantDescriptor<T> {
    data: Vec<T>,
    n_rows: usize,
    n_cols: usize,
    normalization: Normalization,
}

impl<T: Real> InvariantDescriptor<T> {
    pub fn from_rows(n_rows: usize, n_cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {n_rows}x{n_cols} descriptor",
                data.len()
            )));
        }
        Ok(InvariantDescriptor {
            data,
            n_rows,
            n_cols,
            normalization: Normalization::Raw,
        })
    }

    /// Uses the sinogram rows themselves, skipping the magnitude spectrum.
    ///
    /// This keeps the offset shifts a translation induces and exists to measure
    /// what the magnitude step buys.
    pub fn from_sinogram_rows(sino: &Sinogram<T>) -> Self {
        InvariantDescriptor {
            data: sino.data().to_vec(),
            n_rows: sino.n_angles(),
            n_cols: sino.n_offsets(),
            normalization: Normalization::Raw,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
    }

    pub fn scaled(&self, factor: T) -> Self {
        InvariantDescriptor {
            data: self.data.iter().map(|&v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// Same rolling convention as [`Sinogram::roll_rows`]: output row `i` is row `i + shift`.
    pub fn roll_rows(&self, shift: isize) -> Self {
        let s = shift.rem_euclid(self.n_rows as isize) as usize;
        let mut data = Vec::with_capacity(self.data.len());
        for i in 0..self.n_rows {
            data.extend_from_slice(self.row((i + s) % self.n_rows));
        }
        InvariantDescriptor { data, ..self.clone() }
    }

    pub fn write_npy(&self, path: impl AsRef<Path>) -> Result<()> {
        let values: Vec<f32> = self.data.iter().map(|v| v.to_f64_lossy() as f32).collect();
        npy::write_npy_f32(path, &[self.n_rows, self.n_cols], &values)
    }
}

/// Reusable row-spectrum extractor holding an FFT plan for one row length.
pub struct DescriptorExtractor<T: Real> {
    config: DescriptorConfig,
    len: usize,
    fft: Arc<dyn Fft<T>>,
}

impl<T: Real> DescriptorExtractor<T> {
    pub fn new(config: DescriptorConfig, row_len: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(row_len);
        DescriptorExtractor {
            config,
            len: row_len,
            fft,
        }
    }

    pub fn config(&self) -> &DescriptorConfig {
        &self.config
    }

    pub fn extract(&self, sino: &Sinogram<T>) -> Result<InvariantDescriptor<T>> {
        if sino.n_offsets() != self.len {
            return Err(Error::ShapeMismatch(format!(
                "extractor planned for rows of {}, sinogram rows have {}",
                self.len,
                sino.n_offsets()
            )));
        }
        let n = self.len;
        let (start, end) = self.config.bins(n);
        let n_cols = end - start;
        let n_rows = sino.n_angles();
        let mut data = vec![T::zero(); n_rows * n_cols];
        let mut buf = vec![Complex::default(); n];
        let mut scratch = vec![Complex::default(); self.fft.get_inplace_scratch_len()];
        let half = T::of(0.5);

        // two real rows share one complex transform: z = a + i b
        // reflection about the center bin leaves DFT magnitudes unchanged
        let computed = if sino.is_mirrored() { n_rows / 2 } else { n_rows };
        let mut i = 0;
        while i < computed {
            let second = i + 1 < computed;
            let a = sino.row(i);
            for (k, z) in buf.iter_mut().enumerate() {
                let im = if second { sino.row(i + 1)[k] } else { T::zero() };
                *z = Complex::new(a[k], im);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (col, k) in (start..end).enumerate() {
                let z = buf[k];
                let zc = buf[(n - k) % n].conj();
                data[i * n_cols + col] = ((z + zc) * half).norm_sqr().sqrt();
                if second {
                    data[(i + 1) * n_cols + col] = ((z - zc) * half).norm_sqr().sqrt();
                }
            }
            i += 2;
        }
        let (head, tail) = data.split_at_mut(computed * n_cols);
        tail.copy_from_slice(&head[..tail.len()]);

        let mut descriptor = InvariantDescriptor {
            data,
            n_rows,
            n_cols,
            normalization: self.config.normalization,
        };
        if self.config.normalization == Normalization::L2 {
            let norm = descriptor.frobenius_norm();
            if norm > T::zero() {
                descriptor = descriptor.scaled(norm.recip());
            }
        }
        Ok(descriptor)
    }
}

/// One-shot convenience wrapper around [`DescriptorExtractor`].
pub fn dft_magnitude_rows<T: Real>(sino: &Sinogram<T>, config: &DescriptorConfig) -> InvariantDescriptor<T> {
    DescriptorExtractor::new(*config, sino.n_offsets())
        .extract(sino)
        .expect("extractor is planned for this sinogram")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radon::RadonSpec;

    fn sino(rows: &[&[f64]]) -> Sinogram<f64> {
        let n = rows[0].len();
        let spec = RadonSpec::new(rows.len().max(4), n, 0.5).unwrap();
        let mut data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        data.resize(spec.n_angles() * n, 0.0);
        Sinogram::from_rows(spec, n, data).unwrap()
    }

    const FULL: DescriptorConfig = DescriptorConfig {
        drop_dc: false,
        half_spectrum: false,
        normalization: Normalization::Raw,
    };

    #[test]
    fn impulse_rows_have_flat_spectra() {
        let d = dft_magnitude_rows(&sino(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]]), &FULL);
        assert_eq!(d.n_cols(), 4);
        for i in 0..2 {
            for &v in d.row(i) {
                assert!((v - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_sinogram_gives_zero_descriptor() {
        let d = dft_magnitude_rows(&sino(&[&[0.0; 8]]), &DescriptorConfig::default());
        assert!(d.data().iter().all(|&v| v == 0.0));
        let l2 = DescriptorConfig {
            normalization: Normalization::L2,
            ..Default::default()
        };
        let d = dft_magnitude_rows(&sino(&[&[0.0; 8]]), &l2);
        assert!(d.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bin_selection() {
        let cfg = DescriptorConfig::default();
        assert_eq!(cfg.bins(400), (1, 201));
        assert_eq!(cfg.bins(9), (1, 5));
        assert_eq!(FULL.bins(8), (0, 8));
        let d = dft_magnitude_rows(&sino(&[&[1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0, 0.0]]), &cfg);
        assert_eq!(d.n_cols(), 4);
    }

    #[test]
    fn odd_row_count_uses_the_unpaired_path() {
        let spec = RadonSpec::new(5, 6, 0.5).unwrap();
        let data: Vec<f64> = (0..30).map(|v| (v * 7 % 11) as f64).collect();
        let s = Sinogram::from_rows(spec, 6, data.clone()).unwrap();
        let d = dft_magnitude_rows(&s, &FULL);
        // compare against a direct DFT of the last row
        let row = &data[24..30];
        for k in 0..6 {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, &x) in row.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (k * n) as f64 / 6.0;
                re += x * ang.cos();
                im += x * ang.sin();
            }
            assert!((d.row(4)[k] - re.hypot(im)).abs() < 1e-9);
        }
    }

    #[test]
    fn l2_normalization_gives_unit_norm() {
        let cfg = DescriptorConfig {
            normalization: Normalization::L2,
            ..Default::default()
        };
        let d = dft_magnitude_rows(&sino(&[&[1.0, 5.0, 2.0, 0.0, 3.0, 1.0]]), &cfg);
        assert!((d.frobenius_norm() - 1.0).abs() < 1e-12);
        assert_eq!(d.normalization(), Normalization::L2);
    }
}
