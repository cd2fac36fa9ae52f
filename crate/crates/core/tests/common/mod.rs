//! Shared fixtures and slow reference implementations for the integration tests.
#![allow(dead_code)]

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use radyaw::bev::Raster;
use radyaw::pipeline::Pipeline;
use radyaw::toycase::{synthetic_scene, SceneConfig};
use radyaw::{BevImage, GridSpec, PipelineConfig, Real};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random binary image whose support stays `margin` pixels inside the inscribed circle.
pub fn random_disc_image(rng: &mut ChaCha8Rng, size: usize, fill: f64, margin: f64) -> Raster<f64> {
    let c = (size / 2) as f64;
    let r = c - margin;
    let data = (0..size * size)
        .map(|k| {
            let (u, v) = ((k % size) as f64 - c, (k / size) as f64 - c);
            let inside = u * u + v * v < r * r;
            if inside && rng.random::<f64>() < fill { 1.0 } else { 0.0 }
        })
        .collect();
    Raster::from_vec(size, data).unwrap()
}

/// Random rectangles and segments, closer to real BEV content than white noise.
pub fn random_structured_bev(rng: &mut ChaCha8Rng, spec: GridSpec) -> BevImage {
    let s = spec.size_px();
    let c = (s / 2) as f64;
    let r = c * 0.6;
    let mut image = BevImage::empty(spec);
    for _ in 0..6 {
        let (x0, y0) = (rng.random_range(-r..r), rng.random_range(-r..r));
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let len = rng.random_range(0.1 * c..0.4 * c);
        let n = (len * 2.0) as usize;
        for k in 0..=n {
            let t = k as f64 / n as f64 * len;
            let (x, y) = (x0 + t * angle.cos() + c, y0 + t * angle.sin() + c);
            let (col, row) = (x.floor() as i64, y.floor() as i64);
            if (0..s as i64).contains(&col) && (0..s as i64).contains(&row) {
                image.set(col as usize, row as usize, true);
            }
        }
    }
    image
}

pub fn scene_bev() -> BevImage {
    let pipeline = Pipeline::<f64>::new(PipelineConfig::default()).unwrap();
    pipeline.bev(&synthetic_scene(&SceneConfig::default()))
}

/// An asymmetric L of two bars, `size` pixels square.
pub fn l_shape(size: usize) -> BevImage {
    let spec = GridSpec::new(size, 0.5).unwrap();
    let mut image = BevImage::empty(spec);
    let c = size / 2;
    for k in 0..size / 4 {
        image.set(c - size / 8 + k, c + size / 10, true);
        image.set(c + size / 8, c - size / 6 + k / 2, true);
    }
    image.set(c - size / 8, c - size / 8, true);
    image
}

/// Copy shifted by whole pixels: `out(col, row) = in(col - dx, row - dy)`.
pub fn shift_image(image: &BevImage, dx: i64, dy: i64) -> BevImage {
    let s = image.size() as i64;
    let mut out = BevImage::empty(*image.spec());
    for row in 0..s {
        for col in 0..s {
            let (sc, sr) = (col - dx, row - dy);
            if (0..s).contains(&sc) && (0..s).contains(&sr) && image.get(sc as usize, sr as usize) {
                out.set(col as usize, row as usize, true);
            }
        }
    }
    out
}

/// `scores[a] = Σ_i <q_i, p_{(i - a) mod n}>` by direct summation.
pub fn brute_correlation(q: &[f64], p: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    (0..rows)
        .map(|a| {
            let mut total = 0.0;
            for i in 0..rows {
                let j = (i + rows - a) % rows;
                for k in 0..cols {
                    total += q[i * cols + k] * p[j * cols + k];
                }
            }
            total
        })
        .collect()
}

/// Magnitudes of the direct O(n^2) DFT of one row.
pub fn naive_dft_magnitude(row: &[f64]) -> Vec<f64> {
    let n = row.len();
    (0..n)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &x) in row.iter().enumerate() {
                let phase = -2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64;
                re += x * phase.cos();
                im += x * phase.sin();
            }
            re.hypot(im)
        })
        .collect()
}

/// One projection row by linear splatting, written independently of the library.
///
/// Pixel `(col, row)` sits at `(col - S/2, row - S/2)`; offsets are measured in
/// bins of `S / n_offsets` pixels around bin `n_offsets / 2` and wrap around.
pub fn splat_oracle<T: Real>(image: &Raster<T>, theta_deg: f64, n_offsets: usize) -> Vec<f64> {
    let s = image.size();
    let c = (s / 2) as f64;
    let pitch = s as f64 / n_offsets as f64;
    let (sin, cos) = theta_deg.to_radians().sin_cos();
    let mut out = vec![0.0; n_offsets];
    for row in 0..s {
        for col in 0..s {
            let w = image.get(col, row).to_f64().unwrap();
            if w == 0.0 {
                continue;
            }
            let (u, v) = (col as f64 - c, row as f64 - c);
            let b = (u * cos + v * sin) / pitch + (n_offsets / 2) as f64;
            let lo = b.floor();
            let frac = b - lo;
            let j = (lo as i64).rem_euclid(n_offsets as i64) as usize;
            out[j] += w * (1.0 - frac) / pitch;
            out[(j + 1) % n_offsets] += w * frac / pitch;
        }
    }
    out
}

pub fn frobenius(data: &[f64]) -> f64 {
    data.iter().map(|v| v * v).sum::<f64>().sqrt()
}
