//! Library results against slow, independently written reference computations.

mod common;

use rand::RngExt;
use radyaw::bev::Raster;
use radyaw::correlate::Correlator;
use radyaw::radon::Sinogram;
use radyaw::{
    circular_correlate, dft_magnitude_rows, radon_transform, rasterize_bev, refine_peak, DescriptorConfig, ErrorStats,
    GridSpec, Normalization, Point, PointCloud, RadonSpec,
};

use common::*;

fn full_spectrum() -> DescriptorConfig {
    DescriptorConfig {
        drop_dc: false,
        half_spectrum: false,
        normalization: Normalization::Raw,
    }
}

fn sinogram_of_rows(rows: &[Vec<f64>]) -> Sinogram<f64> {
    let n_angles = rows.len().max(4);
    let width = rows[0].len();
    let mut data: Vec<f64> = rows.iter().flatten().copied().collect();
    data.resize(n_angles * width, 0.0);
    Sinogram::from_rows(RadonSpec::new(n_angles, width, 0.5).unwrap(), width, data).unwrap()
}

#[test]
fn rasterization_matches_floor_division_binning() {
    let mut rng = rng(21);
    let spec = GridSpec::default();
    let points: Vec<Point> = (0..1000)
        .map(|_| {
            let r = 10.0 * rng.random::<f64>().sqrt();
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            Point::new((r * phi.cos()) as f32, (r * phi.sin()) as f32, 0.5)
        })
        .collect();
    let image = rasterize_bev(&PointCloud::new(points.clone()), &spec);

    let mut cells = std::collections::BTreeSet::new();
    for p in &points {
        let col = (p.x as f64 / 0.5).floor() as i64 + 200;
        let row = (p.y as f64 / 0.5).floor() as i64 + 200;
        cells.insert((col, row));
    }
    assert_eq!(image.count(), cells.len());
    for (col, row) in cells {
        assert!(image.get(col as usize, row as usize), "pixel ({col}, {row}) missing");
    }
}

#[test]
fn radon_of_a_line_matches_the_splat_oracle() {
    let size = 21;
    let mut data = vec![0.0; size * size];
    for col in 0..size {
        data[10 * size + col] = 1.0;
    }
    let image = Raster::from_vec(size, data).unwrap();
    let spec = RadonSpec::new(360, size, 0.5).unwrap();
    let sino = radon_transform(&image, &spec);

    for i in 0..spec.n_angles() {
        let oracle = splat_oracle(&image, i as f64, size);
        for (j, (a, b)) in sino.row(i).iter().zip(&oracle).enumerate() {
            assert!((a - b).abs() < 1e-9, "row {i} bin {j}: {a} vs {b}");
        }
        assert!((sino.row_mass(i) - 21.0).abs() / 21.0 < 0.02);
    }
    // integration lines along the line collect all of it in one bin
    let along = sino.row(90);
    assert!((along[spec.center_bin()] - 21.0).abs() < 1e-9);
    // across it every bin sees one pixel
    assert!(sino.row(0).iter().all(|&v| (v - 1.0).abs() < 1e-9));
}

#[test]
fn shifted_impulses_have_identical_flat_spectra() {
    let sino = sinogram_of_rows(&[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]]);
    let d = dft_magnitude_rows(&sino, &full_spectrum());
    for i in 0..2 {
        for &v in d.row(i) {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }
}

#[test]
fn magnitudes_match_direct_dft_and_ignore_circular_shifts() {
    let mut rng = rng(22);
    for _ in 0..50 {
        let row: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let shifted: Vec<f64> = (0..8).map(|j| row[(j + 8 - 3) % 8]).collect();
        let d = dft_magnitude_rows(&sinogram_of_rows(&[row.clone(), shifted]), &full_spectrum());
        let oracle = naive_dft_magnitude(&row);
        for k in 0..8 {
            assert!((d.row(0)[k] - oracle[k]).abs() <= 1e-12);
            assert!((d.row(1)[k] - d.row(0)[k]).abs() <= 1e-12);
        }
    }
}

#[test]
fn half_spectrum_without_dc_keeps_bins_one_to_half() {
    let mut rng = rng(23);
    let row: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
    let d = dft_magnitude_rows(&sinogram_of_rows(&[row.clone()]), &DescriptorConfig::default());
    let oracle = naive_dft_magnitude(&row);
    assert_eq!(d.n_cols(), 5);
    for k in 1..=5 {
        assert!((d.row(0)[k - 1] - oracle[k]).abs() < 1e-12);
    }
}

#[test]
fn correlation_of_small_random_descriptors_matches_brute_force() {
    let mut rng = rng(24);
    for _ in 0..20 {
        let q: Vec<f64> = (0..16 * 9).map(|_| rng.random()).collect();
        let p: Vec<f64> = (0..16 * 9).map(|_| rng.random()).collect();
        let dq = radyaw::InvariantDescriptor::from_rows(16, 9, q.clone()).unwrap();
        let dp = radyaw::InvariantDescriptor::from_rows(16, 9, p.clone()).unwrap();
        let fast = Correlator::<f64>::new(16).scores(&dq, &dp).unwrap();
        let slow = brute_correlation(&q, &p, 16, 9);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() / b.abs() <= 1e-9);
        }
    }
}

#[test]
fn rolled_descriptor_is_found_with_its_twin() {
    let mut rng = rng(25);
    let (rows, cols) = (360, 12);
    let q: Vec<f64> = (0..rows * cols).map(|_| rng.random()).collect();
    let dq = radyaw::InvariantDescriptor::from_rows(rows, cols, q).unwrap();
    let dp = dq.roll_rows(30);
    let result = circular_correlate(&dq, &dp).unwrap();
    assert!(result.best_bin == 30 || result.best_bin == 210, "best bin {}", result.best_bin);
    let mut pair = result.ambiguity_pair;
    pair.sort_by(f64::total_cmp);
    assert_eq!(pair, [30.0, 210.0]);
}

/// Vertex of the parabola through `(-1, a), (0, b), (1, c)` by solving the 3x3 system with Cramer's rule.
fn quadratic_fit_vertex(a: f64, b: f64, c: f64) -> f64 {
    let m = [[1.0, -1.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]];
    let y = [a, b, c];
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    let replaced = |col: usize| {
        let mut r = m;
        for (row, value) in r.iter_mut().zip(y) {
            row[col] = value;
        }
        det(&r) / d
    };
    let (qa, qb) = (replaced(0), replaced(1));
    -qb / (2.0 * qa)
}

#[test]
fn refinement_matches_quadratic_fit_oracle() {
    let bin = 100;
    let mut scores = vec![0.0; 360];
    let (a, b, c) = (1.0, 2.0, 1.5);
    scores[bin - 1] = a;
    scores[bin] = b;
    scores[bin + 1] = c;
    let vertex = quadratic_fit_vertex(a, b, c);
    assert!((vertex - 1.0 / 6.0).abs() < 1e-12);
    assert!((refine_peak(&scores, bin) - (bin as f64 + vertex)).abs() < 1e-9);

    let mut rng = rng(26);
    for _ in 0..200 {
        let b = rng.random_range(1.0..2.0);
        let (a, c) = (b - rng.random_range(0.01..1.0), b - rng.random_range(0.01..1.0));
        scores[bin - 1] = a;
        scores[bin] = b;
        scores[bin + 1] = c;
        let expected = bin as f64 + quadratic_fit_vertex(a, b, c);
        assert!((refine_peak(&scores, bin) - expected).abs() < 1e-9);
    }
}

#[test]
fn refinement_of_symmetric_triples_stays_on_the_bin() {
    assert_eq!(refine_peak(&[0.0, 1.0, 2.0, 1.0], 2), 180.0);
    assert_eq!(refine_peak(&[1.0, 2.0, 1.0, 0.0], 1), 90.0);
}

fn sorted_quantile_oracle(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[test]
fn four_pair_statistics_follow_linear_interpolation() {
    let errors = [0.2, 0.8, 2.0, 10.0];
    let stats = ErrorStats::from_errors(&errors).unwrap();
    assert_eq!((stats.frac_1deg, stats.frac_3deg, stats.frac_5deg), (0.5, 0.75, 0.75));
    for (got, q) in [(stats.q25, 0.25), (stats.q50, 0.5), (stats.q75, 0.75)] {
        assert!((got - sorted_quantile_oracle(&errors, q)).abs() < 1e-12);
    }
    assert!((stats.q25 - 0.65).abs() < 1e-12);
    assert!((stats.q50 - 1.4).abs() < 1e-12);
    assert!((stats.q75 - 4.0).abs() < 1e-12);
}
