//! Per-stage wall-clock timing of the estimation pipeline.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pipeline::Pipeline;
use crate::scalar::Real;
use crate::stats::quantile_sorted;
use crate::toycase::{synthetic_scene, transformed_copy, SceneConfig};

pub const MIN_WARMUP: usize = 10;

pub const STAGES: [&str; 4] = ["preprocess", "feature_extraction", "heading_estimation", "total"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageTiming {
    pub median_ms: f64,
    pub p95_ms: f64,
}

/// Timings in the order of [`STAGES`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub iterations: usize,
    pub stages: [StageTiming; 4],
}

impl BenchReport {
    pub fn total(&self) -> StageTiming {
        self.stages[3]
    }

    /// One column per stage, one row per statistic.
    pub fn to_table(&self) -> String {
        let mut out = String::from("stat");
        for name in STAGES {
            write!(out, ",{name}_ms").unwrap();
        }
        out.push('\n');
        for (label, pick) in [("median", 0), ("p95", 1)] {
            out.push_str(label);
            for s in &self.stages {
                write!(out, ",{:.4}", if pick == 0 { s.median_ms } else { s.p95_ms }).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn summarize(mut samples: Vec<f64>) -> StageTiming {
    samples.sort_by(f64::total_cmp);
    StageTiming {
        median_ms: quantile_sorted(&samples, 0.5),
        p95_ms: quantile_sorted(&samples, 0.95),
    }
}

/// Times preprocessing (ground removal and rasterization of both clouds),
/// feature extraction (sinograms and descriptors) and heading estimation
/// (correlation, refinement and half-turn resolution) on a synthetic pair.
pub fn bench<T: Real>(pipeline: &Pipeline<T>, scene: &SceneConfig, n_iters: usize, warmup: usize) -> Result<BenchReport> {
    if n_iters == 0 {
        return Err(Error::InvalidArgument("need at least one timed iteration".into()));
    }
    let warmup = warmup.max(MIN_WARMUP);
    let query = synthetic_scene(scene);
    let reference = transformed_copy(&query, 37.0, (3.0, -2.0));
    let estimator = pipeline.estimator();
    let mut samples = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for iter in 0..warmup + n_iters {
        let start = Instant::now();
        let bq = pipeline.bev(&query).to_raster::<T>();
        let bp = pipeline.bev(&reference).to_raster::<T>();
        let t_pre = Instant::now();
        let fq = estimator.features(&bq)?;
        let fp = estimator.features(&bp)?;
        let t_feat = Instant::now();
        let estimate = estimator.estimate_from_features(&bq, &fq, &bp, &fp)?;
        let end = Instant::now();
        std::hint::black_box(estimate);
        if iter >= warmup {
            let ms = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e3;
            samples[0].push(ms(start, t_pre));
            samples[1].push(ms(t_pre, t_feat));
            samples[2].push(ms(t_feat, end));
            samples[3].push(ms(start, end));
        }
    }
    let [a, b, c, d] = samples.map(summarize);
    Ok(BenchReport {
        iterations: n_iters,
        stages: [a, b, c, d],
    })
}
