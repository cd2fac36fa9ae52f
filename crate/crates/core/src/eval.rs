//! Evaluation over a manifest of query/reference pairs with known relative heading.
//!
//! Manifest columns (header required): `query,reference,gt_yaw_deg,gt_tx,gt_ty`
//! plus optional `mask_q,mask_p`. Relative paths resolve against the manifest's
//! directory. Inputs ending in `.pgm` are read as BEV images, `.bin` as
//! `kitti_bin` clouds, anything else as `xyz_csv` clouds. Masks are NPY float
//! arrays of shape `[S, S]`.
//!
//! `gt_yaw_deg` follows the estimator's convention: the reference BEV is the
//! query BEV sampled at `R(gt_yaw) u + t`. For two scans with world headings
//! `ψ_q` and `ψ_r` this is `ψ_r - ψ_q`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::angle::{angular_error_deg, normalize_deg};
use crate::bev::{BevImage, Raster};
use crate::cloud::{load_pointcloud, CloudFormat};
use crate::error::{Error, Result};
use crate::npy::read_npy_f32;
use crate::pipeline::Pipeline;
use crate::scalar::Real;
use crate::stats::ErrorStats;

pub const DEFAULT_RETRIEVAL_RADIUS_M: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairEntry {
    pub query: PathBuf,
    pub reference: PathBuf,
    pub gt_yaw_deg: f64,
    pub gt_translation_m: (f64, f64),
    pub mask_q: Option<PathBuf>,
    pub mask_p: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PairManifest {
    pub entries: Vec<PairEntry>,
}

impl PairManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                other => Error::parse(path, "header", format!("{other:?}")),
            })?;
        let headers = reader
            .headers()
            .map_err(|e| Error::parse(path, "line 1", e.to_string()))?
            .clone();
        let column = |name: &str| headers.iter().position(|h| h == name);
        let mut required = [0usize; 5];
        for (slot, name) in required.iter_mut().zip(["query", "reference", "gt_yaw_deg", "gt_tx", "gt_ty"]) {
            *slot = column(name).ok_or_else(|| Error::Schema {
                path: path.to_path_buf(),
                message: format!("missing required column {name:?}"),
            })?;
        }
        let [q_col, r_col, yaw_col, tx_col, ty_col] = required;
        let (mq_col, mp_col) = (column("mask_q"), column("mask_p"));
        let resolve = |p: &str| -> PathBuf {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };

        let mut entries = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                Error::parse(path, format!("line {line}"), e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |c: usize| record.get(c).unwrap_or("");
            let number = |c: usize| -> Result<f64> {
                field(c)
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(path, format!("line {line}"), format!("bad number {:?}", field(c))))
            };
            let optional_path = |c: Option<usize>| c.map(field).filter(|s| !s.is_empty()).map(resolve);
            entries.push(PairEntry {
                query: resolve(field(q_col)),
                reference: resolve(field(r_col)),
                gt_yaw_deg: normalize_deg(number(yaw_col)?),
                gt_translation_m: (number(tx_col)?, number(ty_col)?),
                mask_q: optional_path(mq_col),
                mask_p: optional_path(mp_col),
            });
        }
        Ok(PairManifest { entries })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairOutcome {
    pub index: usize,
    pub estimate_deg: Option<f64>,
    pub error_deg: Option<f64>,
    pub confidence: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub outcomes: Vec<PairOutcome>,
    /// Statistics over successful pairs; `None` when every pair failed.
    pub stats: Option<ErrorStats>,
    pub n_failed: usize,
}

impl EvalReport {
    pub fn to_csv(&self, manifest: &PairManifest) -> String {
        let mut out = String::from("index,query,reference,gt_yaw_deg,estimate_deg,error_deg,confidence,status\n");
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for (o, e) in self.outcomes.iter().zip(&manifest.entries) {
            let status = o.failure.as_deref().map_or("ok".to_string(), |f| format!("failed: {}", f.replace(',', ";")));
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                o.index,
                e.query.display(),
                e.reference.display(),
                e.gt_yaw_deg,
                fmt(o.estimate_deg),
                fmt(o.error_deg),
                fmt(o.confidence.filter(|c| c.is_finite())),
                status
            )
            .unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub retrieval_radius_m: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            retrieval_radius_m: DEFAULT_RETRIEVAL_RADIUS_M,
        }
    }
}

fn load_bev<T: Real>(path: &Path, pipeline: &Pipeline<T>) -> Result<BevImage> {
    let grid = pipeline.config().grid;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        let image = BevImage::read_pgm(path, grid.meters_per_px(), grid.center())?;
        if image.size() != grid.size_px() {
            return Err(Error::ShapeMismatch(format!(
                "{} is {1}x{1}, grid is {2}x{2}",
                path.display(),
                image.size(),
                grid.size_px()
            )));
        }
        Ok(image)
    } else {
        Ok(pipeline.bev(&load_pointcloud(path, CloudFormat::from_path(path))?))
    }
}

/// Loads an `[S, S]` NPY mask.
pub fn load_mask<T: Real>(path: &Path, size: usize) -> Result<Raster<T>> {
    let (shape, values) = read_npy_f32(path)?;
    if shape != [size, size] {
        return Err(Error::ShapeMismatch(format!(
            "mask {} has shape {shape:?}, expected [{size}, {size}]",
            path.display()
        )));
    }
    Raster::from_vec(size, values.into_iter().map(|v| T::of(v as f64)).collect())
}

fn evaluate_one<T: Real>(entry: &PairEntry, pipeline: &Pipeline<T>, config: &EvalConfig) -> Result<(f64, f64)> {
    let (tx, ty) = entry.gt_translation_m;
    if tx.hypot(ty) > config.retrieval_radius_m {
        return Err(Error::InvalidArgument(format!(
            "ground-truth translation {:.3} m exceeds the {} m retrieval radius",
            tx.hypot(ty),
            config.retrieval_radius_m
        )));
    }
    let size = pipeline.config().grid.size_px();
    let query = load_bev(&entry.query, pipeline)?;
    let reference = load_bev(&entry.reference, pipeline)?;
    let mask_q = entry.mask_q.as_deref().map(|p| load_mask::<T>(p, size)).transpose()?;
    let mask_p = entry.mask_p.as_deref().map(|p| load_mask::<T>(p, size)).transpose()?;
    let estimate = pipeline.estimate_masked(&query, mask_q.as_ref(), &reference, mask_p.as_ref())?;
    Ok((estimate.angle_deg, estimate.confidence))
}

/// Runs every manifest row; failed rows are reported and left out of the statistics.
pub fn evaluate_pairs<T: Real>(manifest: &PairManifest, pipeline: &Pipeline<T>, config: &EvalConfig) -> Result<EvalReport> {
    if manifest.entries.is_empty() {
        return Err(Error::InvalidArgument("manifest has no pairs".into()));
    }
    let outcomes: Vec<PairOutcome> = manifest
        .entries
        .par_iter()
        .enumerate()
        .map(|(index, entry)| match evaluate_one(entry, pipeline, config) {
            Ok((angle, confidence)) => PairOutcome {
                index,
                estimate_deg: Some(angle),
                error_deg: Some(angular_error_deg(angle, entry.gt_yaw_deg)),
                confidence: Some(confidence),
                failure: None,
            },
            Err(e) => PairOutcome {
                index,
                estimate_deg: None,
                error_deg: None,
                confidence: None,
                failure: Some(e.to_string()),
            },
        })
        .collect();
    let errors: Vec<f64> = outcomes.iter().filter_map(|o| o.error_deg).collect();
    let n_failed = outcomes.len() - errors.len();
    let stats = if errors.is_empty() {
        None
    } else {
        Some(ErrorStats::from_errors(&errors)?)
    };
    Ok(EvalReport {
        outcomes,
        stats,
        n_failed,
    })
}
