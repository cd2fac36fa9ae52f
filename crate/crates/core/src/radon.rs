//! Discrete Radon transform of BEV images.
//!
//! Row `i` of a sinogram holds line integrals along lines whose normal is
//! `k(θ_i) = (cos θ_i, sin θ_i)`, `θ_i = i * 360° / N_θ`, and whose signed
//! distance from the image center `c = (S/2, S/2)` is `τ_j = (j - N_τ/2) * pitch`,
//! `pitch = S / N_τ` pixels. Rotating an image about `c` therefore rolls the
//! sinogram rows, and translating it shifts each row along `τ` by `k(θ)·t`.
//!
//! The offset axis is periodic with period `N_τ` bins. Content inside the
//! inscribed circle only touches the wrap at the extreme bin.

use std::path::Path;

use rayon::prelude::*;

use crate::bev::Raster;
use crate::error::{Error, Result};
use crate::npy;
use crate::pgm;
use crate::scalar::Real;

pub const DEFAULT_N_ANGLES: usize = 360;
pub const DEFAULT_SAMPLE_STEP_PX: f64 = 0.5;

/// How line integrals are discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Projector {
    /// Each pixel's mass is split linearly between the two offset bins
    /// bracketing its projection. Mass is conserved exactly on every row.
    #[default]
    PixelSplat,
    /// Bilinear samples taken every `sample_step_px` along each line.
    LineSampling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadonSpec {
    n_angles: usize,
    n_offsets: usize,
    sample_step_px: f64,
    projector: Projector,
}

impl RadonSpec {
    pub fn new(n_angles: usize, n_offsets: usize, sample_step_px: f64) -> Result<Self> {
        if n_angles < 4 {
            return Err(Error::InvalidArgument(format!("need at least 4 angles, got {n_angles}")));
        }
        if n_offsets < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 offsets, got {n_offsets}")));
        }
        if !(sample_step_px > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sample step must be positive, got {sample_step_px}"
            )));
        }
        Ok(RadonSpec {
            n_angles,
            n_offsets,
            sample_step_px,
            projector: Projector::default(),
        })
    }

    /// 360 angles and one offset bin per pixel of an `S x S` image.
    pub fn for_grid(size_px: usize) -> Self {
        RadonSpec {
            n_angles: DEFAULT_N_ANGLES,
            n_offsets: size_px,
            sample_step_px: DEFAULT_SAMPLE_STEP_PX,
            projector: Projector::default(),
        }
    }

    pub fn with_projector(mut self, projector: Projector) -> Self {
        self.projector = projector;
        self
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn n_offsets(&self) -> usize {
        self.n_offsets
    }

    pub fn sample_step_px(&self) -> f64 {
        self.sample_step_px
    }

    pub fn projector(&self) -> Projector {
        self.projector
    }

    pub fn deg_per_bin(&self) -> f64 {
        360.0 / self.n_angles as f64
    }

    /// Offset bin width in pixels for an `S x S` source.
    pub fn pitch(&self, source_size: usize) -> f64 {
        source_size as f64 / self.n_offsets as f64
    }

    /// Index of the bin at `τ = 0`.
    pub fn center_bin(&self) -> usize {
        self.n_offsets / 2
    }
}

/// `N_θ x N_τ` matrix of line integrals, row-major by angle.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram<T> {
    data: Vec<T>,
    spec: RadonSpec,
    source_size: usize,
    /// Row `i + N/2` is known to be row `i` reflected about the center bin.
    mirrored: bool,
}

impl<T: Real> Sinogram<T> {
    pub fn from_rows(spec: RadonSpec, source_size: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != spec.n_angles * spec.n_offsets {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {}x{} sinogram",
                data.len(),
                spec.n_angles,
                spec.n_offsets
            )));
        }
        Ok(Sinogram {
            data,
            spec,
            source_size,
            mirrored: false,
        })
    }

    pub fn spec(&self) -> &RadonSpec {
        &self.spec
    }

    pub fn source_size(&self) -> usize {
        self.source_size
    }

    pub fn n_angles(&self) -> usize {
        self.spec.n_angles
    }

    pub fn n_offsets(&self) -> usize {
        self.spec.n_offsets
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        let n = self.spec.n_offsets;
        &self.data[i * n..(i + 1) * n]
    }

    /// True when the second half of the rows mirrors the first, as for every
    /// even-angle-count transform of [`radon_transform`].
    pub fn is_mirrored(&self) -> bool {
        self.mirrored
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.spec.n_offsets)
    }

    /// `Σ_τ R(θ_i, τ) * pitch`, which equals the image mass for complete projections.
    pub fn row_mass(&self, i: usize) -> T {
        let pitch = T::of(self.spec.pitch(self.source_size));
        self.row(i).iter().fold(T::zero(), |acc, &v| acc + v) * pitch
    }

    /// Circular shift along the angle axis: output row `i` is input row `i + shift`.
    ///
    /// With this convention `radon(rotate(image, m bins)) == roll_rows(radon(image), m)`.
    pub fn roll_rows(&self, shift: isize) -> Sinogram<T> {
        let n = self.spec.n_angles;
        let width = self.spec.n_offsets;
        let s = shift.rem_euclid(n as isize) as usize;
        let mut data = Vec::with_capacity(self.data.len());
        for i in 0..n {
            let src = (i + s) % n;
            data.extend_from_slice(&self.data[src * width..(src + 1) * width]);
        }
        Sinogram {
            data,
            spec: self.spec,
            source_size: self.source_size,
            mirrored: self.mirrored,
        }
    }

    pub fn write_npy(&self, path: impl AsRef<Path>) -> Result<()> {
        let values: Vec<f32> = self.data.iter().map(|v| v.to_f64_lossy() as f32).collect();
        npy::write_npy_f32(path, &[self.spec.n_angles, self.spec.n_offsets], &values)
    }

    /// Min-max normalized greyscale image; angles run down, offsets across.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let values: Vec<f64> = self.data.iter().map(|v| v.to_f64_lossy()).collect();
        pgm::write_normalized(path, self.spec.n_offsets, self.spec.n_angles, &values)
    }
}

/// Occupied pixels of an image as centered coordinates plus weight.
struct Support<T> {
    u: Vec<T>,
    v: Vec<T>,
    w: Vec<T>,
    /// Largest distance of a support pixel from the rotation center, in pixels.
    reach: f64,
}

impl<T: Real> Support<T> {
    fn of(image: &Raster<T>) -> Self {
        let s = image.size();
        let c = (s / 2) as f64;
        let mut support = Support {
            u: Vec::new(),
            v: Vec::new(),
            w: Vec::new(),
            reach: 0.0,
        };
        let mut reach_sq: f64 = 0.0;
        for (row, line) in image.data().chunks_exact(s).enumerate() {
            let v = row as f64 - c;
            for (block, cells) in line.chunks(16).enumerate() {
                // branch-free emptiness test keeps the scan of sparse images cheap
                if cells.iter().fold(true, |empty, w| empty & w.is_zero()) {
                    continue;
                }
                for (k, &w) in cells.iter().enumerate() {
                    if w.is_zero() {
                        continue;
                    }
                    let col = block * 16 + k;
                    let u = col as f64 - c;
                    reach_sq = reach_sq.max(u * u + v * v);
                    support.u.push(T::of(u));
                    support.v.push(T::of(v));
                    support.w.push(w);
                }
            }
        }
        support.reach = reach_sq.sqrt();
        support
    }
}

pub fn radon_transform<T: Real>(image: &Raster<T>, spec: &RadonSpec) -> Sinogram<T> {
    let n_angles = spec.n_angles;
    let width = spec.n_offsets;
    let mut data = vec![T::zero(); n_angles * width];

    // Row θ + 180° is row θ mirrored about the center bin, exactly, for both projectors.
    let computed = if n_angles.is_multiple_of(2) { n_angles / 2 } else { n_angles };
    let head = &mut data[..computed * width];
    match spec.projector {
        Projector::PixelSplat => {
            let support = Support::of(image);
            let inv_pitch = 1.0 / spec.pitch(image.size());
            head.par_chunks_mut(width).enumerate().for_each_init(
                || Splatter::new(&support, width, inv_pitch),
                |splatter, (i, row)| splatter.row(&support, spec, i, row),
            );
        }
        Projector::LineSampling => {
            head.par_chunks_mut(width)
                .enumerate()
                .for_each(|(i, row)| sample_row(image, spec, i, row));
        }
    }
    if computed < n_angles {
        let center = spec.center_bin();
        let (first, second) = data.split_at_mut(computed * width);
        for (src, dst) in first.chunks_exact(width).zip(second.chunks_exact_mut(width)) {
            for (j, out) in dst.iter_mut().enumerate() {
                *out = src[(2 * center + width - j) % width];
            }
        }
    }
    Sinogram {
        data,
        spec: *spec,
        source_size: image.size(),
        mirrored: computed < n_angles,
    }
}

/// Scratch space for one splatting worker. Positions are first computed for the whole support,
/// then accumulated into a padded line that is folded onto the periodic offset axis.
struct Splatter<T> {
    /// Fractional part of each support pixel's position on the padded line.
    pos: Vec<T>,
    bin: Vec<u32>,
    line: Vec<T>,
    pad: usize,
    inv_pitch: f64,
}

impl<T: Real> Splatter<T> {
    fn new(support: &Support<T>, width: usize, inv_pitch: f64) -> Self {
        let pad = (support.reach * inv_pitch).ceil() as usize + 2;
        Splatter {
            pos: vec![T::zero(); support.w.len()],
            bin: vec![0; support.w.len()],
            line: vec![T::zero(); width + 2 * pad + 2],
            pad,
            inv_pitch,
        }
    }

    fn row(&mut self, support: &Support<T>, spec: &RadonSpec, i: usize, row: &mut [T]) {
        let width = row.len();
        let theta = (i as f64 * spec.deg_per_bin()).to_radians();
        let (sin, cos) = theta.sin_cos();
        let (kx, ky) = (T::of(cos * self.inv_pitch), T::of(sin * self.inv_pitch));
        let origin = T::of_usize(spec.center_bin() + self.pad);
        for (((p, j), &u), &v) in self.pos.iter_mut().zip(&mut self.bin).zip(&support.u).zip(&support.v) {
            let b = u * kx + v * ky + origin;
            // positions are positive, so truncation is the floor
            *j = b.to_f64_lossy() as u32;
            *p = b - T::of_usize(*j as usize);
        }
        self.line.fill(T::zero());
        let inv_pitch = T::of(self.inv_pitch);
        for ((&frac, &j), &w) in self.pos.iter().zip(&self.bin).zip(&support.w) {
            let j = j as usize;
            let mass = w * inv_pitch;
            let upper = mass * frac;
            self.line[j] = self.line[j] + (mass - upper);
            self.line[j + 1] = self.line[j + 1] + upper;
        }
        let mut j = (width - self.pad % width) % width;
        for &m in &self.line {
            row[j] = row[j] + m;
            j += 1;
            if j == width {
                j = 0;
            }
        }
    }
}

fn sample_row<T: Real>(image: &Raster<T>, spec: &RadonSpec, i: usize, row: &mut [T]) {
    let s = image.size();
    let c = (s / 2) as f64;
    let pitch = spec.pitch(s);
    let step = spec.sample_step_px;
    let theta = (i as f64 * spec.deg_per_bin()).to_radians();
    let (sin, cos) = theta.sin_cos();
    // lines must cross the whole image: half-length covers the corner distance plus the bilinear support
    let reach = ((s as f64 / std::f64::consts::SQRT_2 + 2.0) / step).ceil() as i64;
    let center = spec.center_bin() as f64;
    for (j, out) in row.iter_mut().enumerate() {
        let tau = (j as f64 - center) * pitch;
        let (ox, oy) = (c + tau * cos, c + tau * sin);
        let mut acc = 0.0f64;
        for k in -reach..=reach {
            let along = k as f64 * step;
            acc += bilinear(image, ox - along * sin, oy + along * cos);
        }
        *out = T::of(acc * step);
    }
}

fn bilinear<T: Real>(image: &Raster<T>, x: f64, y: f64) -> f64 {
    let s = image.size() as i64;
    let (x0, y0) = (x.floor(), y.floor());
    let (c0, r0) = (x0 as i64, y0 as i64);
    if c0 < -1 || r0 < -1 || c0 >= s || r0 >= s {
        return 0.0;
    }
    let (fx, fy) = (x - x0, y - y0);
    let at = |col: i64, row: i64| -> f64 {
        if (0..s).contains(&col) && (0..s).contains(&row) {
            image.data()[(row * s + col) as usize].to_f64_lossy()
        } else {
            0.0
        }
    };
    at(c0, r0) * (1.0 - fx) * (1.0 - fy)
        + at(c0 + 1, r0) * fx * (1.0 - fy)
        + at(c0, r0 + 1) * (1.0 - fx) * fy
        + at(c0 + 1, r0 + 1) * fx * fy
}
