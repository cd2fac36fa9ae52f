//! End-to-end behaviour of the heading estimator and its building blocks.

mod common;

use radyaw::bev::Raster;
use radyaw::pipeline::Pipeline;
use radyaw::toycase::transformed_copy;
use radyaw::{
    angular_error_deg, disambiguate_halfturn, estimate_heading, rasterize_bev, transform_bev, BevImage,
    DisambiguationConfig, Error, EstimatorConfig, GridSpec, Interp, Point, PointCloud, PipelineConfig,
};

use common::*;

fn estimate(q: &BevImage, p: &BevImage) -> radyaw::HeadingEstimate {
    estimate_heading(q, p, &EstimatorConfig::for_grid(q.size())).unwrap()
}

/// Two walls of different lengths meeting at a corner, plus a short stub: no rotational symmetry.
fn l_cloud() -> PointCloud {
    let mut points = Vec::new();
    for k in 0..=300 {
        let s = k as f32 * 0.1;
        for z in [0.0, 1.0, 2.0] {
            points.push(Point::new(-8.0 + s, 4.0, z));
            if s <= 14.0 {
                points.push(Point::new(-8.0, 4.0 - s, z));
            }
            if s <= 3.0 {
                points.push(Point::new(10.0, -6.0 + s, z));
            }
        }
    }
    PointCloud::new(points)
}

#[test]
fn identical_images_give_zero() {
    let bev = scene_bev();
    let e = estimate(&bev, &bev);
    assert!(angular_error_deg(e.angle_deg, 0.0) < 1e-6, "{}", e.angle_deg);
    assert_eq!(e.half_turn.chosen_deg, 0.0);
}

#[test]
fn grid_exact_quarter_turn_is_recovered() {
    let bq = scene_bev();
    let bp = transform_bev(&bq, 90.0, (0.0, 0.0), Interp::Nearest);
    let e = estimate(&bq, &bp);
    assert_eq!(e.correlation.best_bin, 90);
    assert!(angular_error_deg(e.angle_deg, 90.0) < 1e-6, "{}", e.angle_deg);

    let mut config = EstimatorConfig::for_grid(bq.size());
    config.refine = false;
    let unrefined: radyaw::HeadingEstimate = estimate_heading(&bq, &bp, &config).unwrap();
    assert_eq!(unrefined.angle_deg, 90.0);
}

#[test]
fn half_turn_picks_the_quarter_turn_over_its_twin() {
    let bq = scene_bev();
    let bp = transform_bev(&bq, 90.0, (0.0, 0.0), Interp::Nearest);
    let (q, p) = (bq.to_raster::<f64>(), bp.to_raster::<f64>());
    let config = DisambiguationConfig::default();
    for candidate in [90.0, 270.0] {
        let decision = disambiguate_halfturn(&q, &p, candidate, &config).unwrap();
        assert_eq!(decision.chosen_deg, 90.0);
        assert!(!decision.low_confidence);
    }
}

#[test]
fn half_turn_keeps_identity_for_asymmetric_content() {
    let bev = l_shape(128);
    let r = bev.to_raster::<f64>();
    for candidate in [0.0, 180.0] {
        let decision = disambiguate_halfturn(&r, &r, candidate, &DisambiguationConfig::default()).unwrap();
        assert_eq!(decision.chosen_deg, 0.0);
    }
}

#[test]
fn l_shape_rotated_and_translated_is_recovered() {
    let pipeline = Pipeline::<f64>::new(PipelineConfig::default()).unwrap();
    let cloud = l_cloud();
    let moved = transformed_copy(&cloud, 217.0, (2.0, -3.0));
    let e = pipeline.estimate_clouds(&cloud, &moved).unwrap();
    assert!(angular_error_deg(e.angle_deg, 217.0) <= 1.0, "{}", e.angle_deg);
    assert!(angular_error_deg(e.half_turn.chosen_deg, 217.0) <= 1.0);
}

#[test]
fn chosen_angle_is_one_of_the_ambiguity_pair() {
    let mut rng = rng(31);
    let spec = GridSpec::new(128, 0.5).unwrap();
    for _ in 0..10 {
        let bq = random_structured_bev(&mut rng, spec);
        let bp = transform_bev(&bq, 33.0, (1.0, 0.5), Interp::Nearest);
        let e = estimate(&bq, &bp);
        assert!(e.correlation.ambiguity_pair.contains(&e.correlation.chosen_deg));
        let scores = &e.correlation.scores;
        assert!(scores.iter().all(|&s| s <= scores[e.correlation.best_bin]));
    }
}

#[test]
fn empty_images_are_degenerate() {
    let spec = GridSpec::default();
    let err = estimate_heading::<f64>(&BevImage::empty(spec), &scene_bev(), &EstimatorConfig::for_grid(400)).unwrap_err();
    assert!(err.is_degenerate_scene());
    assert!(matches!(err, Error::EmptyScene(_)));
}

#[test]
fn mismatched_grids_are_rejected() {
    let small = BevImage::empty(GridSpec::new(64, 0.5).unwrap());
    let err = estimate_heading::<f64>(&small, &scene_bev(), &EstimatorConfig::for_grid(64)).unwrap_err();
    assert!(!err.is_degenerate_scene());
}

#[test]
fn unit_masks_change_nothing() {
    let pipeline = Pipeline::<f64>::new(PipelineConfig::default()).unwrap();
    let bq = scene_bev();
    let bp = transform_bev(&bq, 47.0, (2.0, 1.0), Interp::Nearest);
    let ones = Raster::from_vec(400, vec![1.0; 400 * 400]).unwrap();
    let plain = pipeline.estimate_masked(&bq, None, &bp, None).unwrap();
    let masked = pipeline.estimate_masked(&bq, Some(&ones), &bp, Some(&ones)).unwrap();
    assert_eq!(plain.angle_deg, masked.angle_deg);
    assert_eq!(plain.correlation.scores, masked.correlation.scores);
}

#[test]
fn single_and_double_precision_agree() {
    let bq = scene_bev();
    let bp = transform_bev(&bq, 151.0, (-3.0, 2.0), Interp::Nearest);
    let config = EstimatorConfig::for_grid(400);
    let a: radyaw::HeadingEstimate = estimate_heading(&bq, &bp, &config).unwrap();
    let b: radyaw::HeadingEstimate32 = estimate_heading(&bq, &bp, &config).unwrap();
    assert!(angular_error_deg(a.angle_deg, b.angle_deg) < 1e-3);
    assert!(angular_error_deg(a.angle_deg, 151.0) < 1.0);
}

/// Filled rectangles: solid content, unlike the one-pixel outlines of the toycase scene.
fn solid_blocks() -> BevImage {
    let mut bev = BevImage::empty(GridSpec::default());
    for (c0, r0, w, h) in [(150, 160, 30, 12), (230, 120, 8, 50), (180, 250, 40, 25), (120, 220, 6, 6)] {
        for row in r0..r0 + h {
            for col in c0..c0 + w {
                bev.set(col, row, true);
            }
        }
    }
    bev
}

#[test]
fn rotating_there_and_back_keeps_most_pixels() {
    let bev = solid_blocks();
    for alpha in [17.0, 45.0, 133.0, 260.0] {
        let there = transform_bev(&bev, alpha, (0.0, 0.0), Interp::Nearest);
        let back = transform_bev(&there, -alpha, (0.0, 0.0), Interp::Nearest);
        let kept = bev.cells().iter().zip(back.cells()).filter(|(a, b)| **a == 1 && **b == 1).count();
        assert!(kept as f64 >= 0.95 * bev.count() as f64, "{alpha}: {kept} of {}", bev.count());
    }
    for alpha in [90.0, 180.0, 270.0] {
        let there = transform_bev(&bev, alpha, (0.0, 0.0), Interp::Nearest);
        assert_eq!(transform_bev(&there, -alpha, (0.0, 0.0), Interp::Nearest).cells(), bev.cells());
    }
}

#[test]
fn whole_pixel_translation_commutes_with_rasterization() {
    let spec = GridSpec::default();
    let cloud = l_cloud();
    // both sides move the content by -t
    let t = (1.5, -2.0);
    let shifted_cloud = transformed_copy(&cloud, 0.0, t);
    let direct = rasterize_bev(&shifted_cloud, &spec);
    let resampled = transform_bev(&rasterize_bev(&cloud, &spec), 0.0, t, Interp::Nearest);
    assert_eq!(direct.cells(), resampled.cells());
}
