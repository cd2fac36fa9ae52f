//! Bird's-eye-view occupancy rasterization and planar image transforms.
//!
//! A point `(x, y)` lands in pixel `(floor((x - cx) / res) + S/2, floor((y - cy) / res) + S/2)`
//! where `(cx, cy)` is the grid center. Images are stored row-major with the
//! row index following `y`. Only points strictly inside the inscribed circle of
//! radius `S/2 * res` are kept, so every projection line covers the whole support.

use std::path::Path;

use crate::cloud::{Point, PointCloud};
use crate::error::{Error, Result};
use crate::pgm;
use crate::scalar::Real;

pub const DEFAULT_GRID_SIZE: usize = 400;
pub const DEFAULT_METERS_PER_PX: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    size_px: usize,
    meters_per_px: f64,
    center: (f64, f64),
}

impl GridSpec {
    pub fn new(size_px: usize, meters_per_px: f64) -> Result<Self> {
        Self::with_center(size_px, meters_per_px, (0.0, 0.0))
    }

    pub fn with_center(size_px: usize, meters_per_px: f64, center: (f64, f64)) -> Result<Self> {
        if size_px < 16 || !size_px.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "grid size must be even and at least 16, got {size_px}"
            )));
        }
        if !(meters_per_px > 0.0) || !meters_per_px.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "resolution must be positive, got {meters_per_px}"
            )));
        }
        Ok(GridSpec {
            size_px,
            meters_per_px,
            center,
        })
    }

    pub fn size_px(&self) -> usize {
        self.size_px
    }

    pub fn meters_per_px(&self) -> f64 {
        self.meters_per_px
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    /// Radius of the inscribed circle in meters.
    pub fn radius_m(&self) -> f64 {
        self.size_px as f64 / 2.0 * self.meters_per_px
    }

    /// Pixel `(col, row)` holding the metric point, if it lies inside the inscribed circle.
    pub fn pixel_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        let r = self.radius_m();
        if dx * dx + dy * dy >= r * r {
            return None;
        }
        let half = (self.size_px / 2) as i64;
        let col = (dx / self.meters_per_px).floor() as i64 + half;
        let row = (dy / self.meters_per_px).floor() as i64 + half;
        let s = self.size_px as i64;
        ((0..s).contains(&col) && (0..s).contains(&row)).then_some((col as usize, row as usize))
    }
}

// Validated specs never hold NaN.
impl Eq for GridSpec {}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            size_px: DEFAULT_GRID_SIZE,
            meters_per_px: DEFAULT_METERS_PER_PX,
            center: (0.0, 0.0),
        }
    }
}

/// Square binary occupancy image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BevImage {
    spec: GridSpec,
    cells: Vec<u8>,
}


#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interp {
    #[default]
    Nearest,
    /// Bilinear sampling binarized at 0.5.
    BilinearThreshold,
}

impl BevImage {
    pub fn empty(spec: GridSpec) -> Self {
        BevImage {
            spec,
            cells: vec![0; spec.size_px * spec.size_px],
        }
    }

    /// Builds an image from row-major cells; any nonzero value counts as occupied.
    pub fn from_cells(spec: GridSpec, cells: Vec<u8>) -> Result<Self> {
        let n = spec.size_px * spec.size_px;
        if cells.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} cells for a {s}x{s} grid",
                cells.len(),
                s = spec.size_px
            )));
        }
        Ok(BevImage {
            spec,
            cells: cells.into_iter().map(|c| (c != 0) as u8).collect(),
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn size(&self) -> usize {
        self.spec.size_px
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.cells[row * self.spec.size_px + col] != 0
    }

    pub fn set(&mut self, col: usize, row: usize, occupied: bool) {
        self.cells[row * self.spec.size_px + col] = occupied as u8;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().map(|&c| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(|&c| c == 0)
    }

    pub fn to_raster<T: Real>(&self) -> Raster<T> {
        Raster {
            size: self.size(),
            data: self.cells.iter().map(|&c| if c != 0 { T::one() } else { T::zero() }).collect(),
        }
    }

    /// Real-valued image with each occupied cell weighted by `mask`.
    pub fn masked<T: Real>(&self, mask: &Raster<T>) -> Result<Raster<T>> {
        if mask.size != self.size() {
            return Err(Error::ShapeMismatch(format!(
                "mask is {0}x{0}, image is {1}x{1}",
                mask.size,
                self.size()
            )));
        }
        Ok(Raster {
            size: mask.size,
            data: self
                .cells
                .iter()
                .zip(&mask.data)
                .map(|(&c, &m)| if c != 0 { m } else { T::zero() })
                .collect(),
        })
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let pixels: Vec<u8> = self.cells.iter().map(|&c| c * 255).collect();
        pgm::write_gray(path, self.size(), self.size(), &pixels)
    }

    /// Reads a square PGM; pixels above 127 are occupied. The size is taken from the file.
    pub fn read_pgm(path: impl AsRef<Path>, meters_per_px: f64, center: (f64, f64)) -> Result<Self> {
        let path = path.as_ref();
        let (w, h, pixels) = pgm::read_gray(path)?;
        if w != h {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                message: format!("BEV image must be square, got {w}x{h}"),
            });
        }
        let spec = GridSpec::with_center(w, meters_per_px, center)?;
        Ok(BevImage {
            spec,
            cells: pixels.into_iter().map(|p| (p > 127) as u8).collect(),
        })
    }
}

/// Rasterizes a ground-removed cloud into a binary occupancy image.
pub fn rasterize_bev(cloud: &PointCloud, spec: &GridSpec) -> BevImage {
    rasterize_where(cloud, spec, |_| true)
}

/// Rasterizes only the points passing `keep`, without materializing the filtered cloud.
pub fn rasterize_where(cloud: &PointCloud, spec: &GridSpec, keep: impl Fn(&Point) -> bool) -> BevImage {
    let mut image = BevImage::empty(*spec);
    let s = spec.size_px;
    for p in cloud.points().iter().filter(|p| keep(p)) {
        if let Some((col, row)) = spec.pixel_of(p.x as f64, p.y as f64) {
            image.cells[row * s + col] = 1;
        }
    }
    image
}

/// Dense real-valued square image sharing a [`GridSpec`] geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    size: usize,
    data: Vec<T>,
}

impl<T: Real> Raster<T> {
    pub fn zeros(size: usize) -> Self {
        Raster {
            size,
            data: vec![T::zero(); size * size],
        }
    }

    pub fn from_vec(size: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != size * size {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {size}x{size} raster",
                data.len()
            )));
        }
        Ok(Raster { size, data })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, col: usize, row: usize) -> T {
        self.data[row * self.size + col]
    }

    pub fn mass(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc + v)
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    /// Sum-pools `factor x factor` blocks. `size` must be divisible by `factor`.
    pub fn pooled(&self, factor: usize) -> Raster<T> {
        assert!(factor >= 1 && self.size.is_multiple_of(factor), "pool factor must divide the size");
        if factor == 1 {
            return self.clone();
        }
        let n = self.size / factor;
        let mut out = vec![T::zero(); n * n];
        for (row, src) in self.data.chunks_exact(self.size).enumerate() {
            let dst = &mut out[(row / factor) * n..(row / factor + 1) * n];
            for (d, block) in dst.iter_mut().zip(src.chunks_exact(factor)) {
                *d = block.iter().fold(*d, |acc, &v| acc + v);
            }
        }
        Raster { size: n, data: out }
    }

    /// Resamples so that `out(u) = in(R(alpha) (u - c) + c + shift_px)`, `c = (S/2, S/2)`.
    pub fn transformed(&self, alpha_deg: f64, shift_px: (f64, f64), interp: Interp) -> Raster<T> {
        let s = self.size;
        let mut out = vec![T::zero(); s * s];
        let (sin, cos) = alpha_deg.to_radians().sin_cos();
        let c = (s / 2) as f64;
        for (row, dst) in out.chunks_exact_mut(s).enumerate() {
            let v = row as f64 - c;
            let (x0, y0) = (-sin * v + c + shift_px.0, cos * v + c + shift_px.1);
            for (col, out) in dst.iter_mut().enumerate() {
                let u = col as f64 - c;
                let (x, y) = (cos * u + x0, sin * u + y0);
                *out = match interp {
                    Interp::Nearest => self.sample_nearest(x, y),
                    Interp::BilinearThreshold => self.sample_bilinear(x, y),
                };
            }
        }
        Raster { size: s, data: out }
    }

    fn sample_nearest(&self, x: f64, y: f64) -> T {
        // half-up rounding via truncation; anything left of -0.5 is outside anyway
        let (col, row) = (x + 0.5, y + 0.5);
        let s = self.size as f64;
        if !(col >= 0.0 && row >= 0.0 && col < s && row < s) {
            return T::zero();
        }
        self.data[row as usize * self.size + col as usize]
    }

    fn sample_bilinear(&self, x: f64, y: f64) -> T {
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let s = self.size as i64;
        let at = |col: i64, row: i64| -> f64 {
            if (0..s).contains(&col) && (0..s).contains(&row) {
                self.data[(row * s + col) as usize].to_f64_lossy()
            } else {
                0.0
            }
        };
        let (c0, r0) = (x0 as i64, y0 as i64);
        let v = at(c0, r0) * (1.0 - fx) * (1.0 - fy)
            + at(c0 + 1, r0) * fx * (1.0 - fy)
            + at(c0, r0 + 1) * (1.0 - fx) * fy
            + at(c0 + 1, r0 + 1) * fx * fy;
        T::of(v)
    }
}

/// Samples `image` at `R(alpha) u + t` for every output pixel `u` (relative to the grid center).
///
/// `t` is in meters; samples falling outside the input are empty.
pub fn transform_bev(image: &BevImage, alpha_deg: f64, t: (f64, f64), interp: Interp) -> BevImage {
    let res = image.spec.meters_per_px;
    let shift = (t.0 / res, t.1 / res);
    let out = image.to_raster::<f64>().transformed(alpha_deg, shift, interp);
    BevImage {
        spec: image.spec,
        cells: out.data.iter().map(|&v| (v >= 0.5) as u8).collect(),
    }
}
