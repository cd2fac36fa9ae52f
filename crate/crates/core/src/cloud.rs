//! Point cloud and pose table ingestion.
//!
//! Two cloud formats are understood: `kitti_bin`, a headerless little-endian
//! stream of `f32` quadruples `(x, y, z, intensity)`, and `xyz_csv`, comma
//! separated rows `x,y,z[,intensity]` with an optional header line.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::angle::normalize_deg;
use crate::error::{Error, Result};

/// Default lower bound of the height slab kept by [`remove_ground`], meters.
pub const DEFAULT_Z_MIN: f64 = -1.2;
/// Default upper bound of the height slab kept by [`remove_ground`], meters.
pub const DEFAULT_Z_MAX: f64 = 30.0;
/// Default radius for gathering scans into a submap, meters.
pub const DEFAULT_SUBMAP_RADIUS_M: f64 = 50.0;

const KITTI_STRIDE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Point {
    pub x: f32,
    pub y: f32,
    pub z: f32,
}

impl Point {
    pub fn new(x: f32, y: f32, z: f32) -> Self {
        Point { x, y, z }
    }
}

/// A set of 3D points in a gravity-aligned sensor frame.
///
/// Coordinates are always finite. Intensity is carried only so that clouds
/// can be written back unchanged; nothing downstream reads it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point>,
    intensity: Option<Vec<f32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    KittiBin,
    XyzCsv,
}

impl CloudFormat {
    /// Guesses the format from a file extension: `.bin` is `kitti_bin`, anything else is csv.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("bin") => CloudFormat::KittiBin,
            _ => CloudFormat::XyzCsv,
        }
    }
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Self {
        PointCloud {
            points,
            intensity: None,
        }
    }

    pub fn with_intensity(points: Vec<Point>, intensity: Vec<f32>) -> Result<Self> {
        if points.len() != intensity.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} points but {} intensities",
                points.len(),
                intensity.len()
            )));
        }
        Ok(PointCloud {
            points,
            intensity: Some(intensity),
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn intensity(&self) -> Option<&[f32]> {
        self.intensity.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keeps the points for which `keep` holds, preserving order and intensities.
    pub fn filter(&self, mut keep: impl FnMut(&Point) -> bool) -> PointCloud {
        let mask: Vec<bool> = self.points.iter().map(&mut keep).collect();
        let points = self
            .points
            .iter()
            .zip(&mask)
            .filter(|(_, &k)| k)
            .map(|(p, _)| *p)
            .collect();
        let intensity = self.intensity.as_ref().map(|values| {
            values
                .iter()
                .zip(&mask)
                .filter(|(_, &k)| k)
                .map(|(v, _)| *v)
                .collect()
        });
        PointCloud { points, intensity }
    }

    /// Applies the planar rigid motion `p -> R(yaw) p + t` to every point; z is unchanged.
    pub fn transformed(&self, pose: &Pose2) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| pose.apply(p)).collect(),
            intensity: self.intensity.clone(),
        }
    }

    pub fn extend(&mut self, other: &PointCloud) {
        match (&mut self.intensity, &other.intensity) {
            (Some(mine), Some(theirs)) => mine.extend_from_slice(theirs),
            (Some(mine), None) => mine.extend(std::iter::repeat_n(0.0, other.len())),
            (None, Some(theirs)) if self.points.is_empty() => {
                self.intensity = Some(theirs.clone())
            }
            (None, _) => {}
        }
        self.points.extend_from_slice(&other.points);
    }
}

/// A planar rigid motion: rotation by `yaw_deg` about +z followed by translation `(tx, ty)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Pose2 {
    pub yaw_deg: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Pose2 {
    pub fn new(yaw_deg: f64, tx: f64, ty: f64) -> Self {
        Pose2 { yaw_deg, tx, ty }
    }

    pub fn apply(&self, p: &Point) -> Point {
        let (s, c) = self.yaw_deg.to_radians().sin_cos();
        let (x, y) = (p.x as f64, p.y as f64);
        Point {
            x: (c * x - s * y + self.tx) as f32,
            y: (s * x + c * y + self.ty) as f32,
            z: p.z,
        }
    }

    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.yaw_deg.to_radians().sin_cos();
        Pose2 {
            yaw_deg: -self.yaw_deg,
            tx: -(c * self.tx + s * self.ty),
            ty: -(-s * self.tx + c * self.ty),
        }
    }

    pub fn compose(&self, then: &Pose2) -> Pose2 {
        // (then ∘ self)(p) = R_then (R_self p + t_self) + t_then
        let (s, c) = then.yaw_deg.to_radians().sin_cos();
        Pose2 {
            yaw_deg: self.yaw_deg + then.yaw_deg,
            tx: c * self.tx - s * self.ty + then.tx,
            ty: s * self.tx + c * self.ty + then.ty,
        }
    }
}

/// One row of a ground-truth pose table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoseRecord {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Heading in degrees, normalized to `[0, 360)`.
    pub yaw_deg: f64,
    /// Carried for reference only; never applied.
    pub pitch_deg: Option<f64>,
    pub roll_deg: Option<f64>,
}

impl PoseRecord {
    pub fn planar(&self) -> Pose2 {
        Pose2::new(self.yaw_deg, self.x, self.y)
    }
}

pub fn load_pointcloud(path: impl AsRef<Path>, format: CloudFormat) -> Result<PointCloud> {
    let path = path.as_ref();
    match format {
        CloudFormat::KittiBin => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            parse_kitti_bin(path, &bytes)
        }
        CloudFormat::XyzCsv => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_xyz_csv(path, &text)
        }
    }
}

fn parse_kitti_bin(path: &Path, bytes: &[u8]) -> Result<PointCloud> {
    let whole = bytes.len() / KITTI_STRIDE * KITTI_STRIDE;
    if whole != bytes.len() {
        return Err(Error::parse(
            path,
            format!("byte {whole}"),
            format!(
                "truncated point record: {} trailing bytes, expected {KITTI_STRIDE}",
                bytes.len() - whole
            ),
        ));
    }
    let n = bytes.len() / KITTI_STRIDE;
    let mut points = Vec::with_capacity(n);
    let mut intensity = Vec::with_capacity(n);
    for (i, chunk) in bytes.chunks_exact(KITTI_STRIDE).enumerate() {
        let field = |k: usize| f32::from_le_bytes(chunk[4 * k..4 * k + 4].try_into().unwrap());
        let (x, y, z) = (field(0), field(1), field(2));
        for (k, v) in [x, y, z].into_iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::parse(
                    path,
                    format!("byte {}", i * KITTI_STRIDE + 4 * k),
                    format!("non-finite coordinate {v}"),
                ));
            }
        }
        points.push(Point { x, y, z });
        intensity.push(field(3));
    }
    Ok(PointCloud {
        points,
        intensity: Some(intensity),
    })
}

fn parse_xyz_csv(path: &Path, text: &str) -> Result<PointCloud> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    let mut intensity = Vec::new();
    let mut all_have_intensity = true;
    for (row, record) in reader.records().enumerate() {
        let line = |pos: Option<&csv::Position>| pos.map_or(row as u64 + 1, |p| p.line());
        let record = record.map_err(|e| {
            Error::parse(path, format!("line {}", line(e.position())), e.to_string())
        })?;
        let line = line(record.position());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let leading_numeric = record
            .get(0)
            .is_some_and(|f| f.parse::<f64>().is_ok() || f.eq_ignore_ascii_case("nan"));
        if row == 0 && !leading_numeric {
            continue;
        }
        if !(3..=4).contains(&record.len()) {
            return Err(Error::parse(
                path,
                format!("line {line}"),
                format!("expected 3 or 4 fields, found {}", record.len()),
            ));
        }
        let mut values = [0f32; 4];
        for (k, field) in record.iter().enumerate() {
            let v: f32 = field.parse().map_err(|_| {
                Error::parse(path, format!("line {line}"), format!("not a number: {field:?}"))
            })?;
            if k < 3 && !v.is_finite() {
                return Err(Error::parse(
                    path,
                    format!("line {line}"),
                    format!("non-finite coordinate {field:?}"),
                ));
            }
            values[k] = v;
        }
        all_have_intensity &= record.len() == 4;
        points.push(Point::new(values[0], values[1], values[2]));
        intensity.push(values[3]);
    }
    let intensity = (all_have_intensity && !points.is_empty()).then_some(intensity);
    Ok(PointCloud { points, intensity })
}

pub fn write_pointcloud(path: impl AsRef<Path>, cloud: &PointCloud, format: CloudFormat) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    match format {
        CloudFormat::KittiBin => {
            out.reserve(cloud.len() * KITTI_STRIDE);
            for (i, p) in cloud.points.iter().enumerate() {
                let w = cloud.intensity.as_ref().map_or(0.0, |v| v[i]);
                for v in [p.x, p.y, p.z, w] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        CloudFormat::XyzCsv => {
            for (i, p) in cloud.points.iter().enumerate() {
                match &cloud.intensity {
                    Some(w) => writeln!(out, "{},{},{},{}", p.x, p.y, p.z, w[i]),
                    None => writeln!(out, "{},{},{}", p.x, p.y, p.z),
                }
                .expect("writing to a Vec cannot fail");
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Height band `(z_min, z_max)` of points kept by [`remove_ground`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundSlab {
    z_min: f64,
    z_max: f64,
}

impl GroundSlab {
    pub fn new(z_min: f64, z_max: f64) -> Result<Self> {
        if !(z_min < z_max) {
            return Err(Error::InvalidArgument(format!(
                "ground slab needs z_min < z_max, got ({z_min}, {z_max})"
            )));
        }
        Ok(GroundSlab { z_min, z_max })
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn keeps(&self, p: &Point) -> bool {
        let z = p.z as f64;
        self.z_min < z && z < self.z_max
    }
}

impl Default for GroundSlab {
    fn default() -> Self {
        GroundSlab {
            z_min: DEFAULT_Z_MIN,
            z_max: DEFAULT_Z_MAX,
        }
    }
}

/// Keeps exactly the points with `z_min < z < z_max`, in their original order.
pub fn remove_ground(cloud: &PointCloud, slab: GroundSlab) -> PointCloud {
    cloud.filter(|p| slab.keeps(p))
}

pub fn load_pose_table(path: impl AsRef<Path>) -> Result<Vec<PoseRecord>> {
    let path = path.as_ref();
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
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let mut required = [0usize; 5];
    for (slot, name) in required.iter_mut().zip(["id", "x", "y", "z", "yaw"]) {
        *slot = column(name).ok_or_else(|| Error::Schema {
            path: path.to_path_buf(),
            message: format!("missing required column {name:?}"),
        })?;
    }
    let [id_col, x_col, y_col, z_col, yaw_col] = required;
    let (pitch_col, roll_col) = (column("pitch"), column("roll"));

    let mut records = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, format!("line {line}"), e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let number = |col: usize| -> Result<f64> {
            let field = record.get(col).unwrap_or("");
            field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::parse(path, format!("line {line}"), format!("bad number {field:?}"))
                })
        };
        let optional = |col: Option<usize>| -> Result<Option<f64>> {
            match col.and_then(|c| record.get(c)).filter(|f| !f.is_empty()) {
                Some(_) => number(col.unwrap()).map(Some),
                None => Ok(None),
            }
        };
        records.push(PoseRecord {
            id: record.get(id_col).unwrap_or("").to_string(),
            x: number(x_col)?,
            y: number(y_col)?,
            z: number(z_col)?,
            yaw_deg: normalize_deg(number(yaw_col)?),
            pitch_deg: optional(pitch_col)?,
            roll_deg: optional(roll_col)?,
        });
    }
    Ok(records)
}

/// Unions scans whose poses lie within `radius_m` of `reference` into the reference frame.
///
/// Each scan is moved by its planar pose into the world frame and then into the
/// frame of `reference`; heights are offset by the pose z difference.
pub fn build_submap(scans: &[(PointCloud, PoseRecord)], reference: &PoseRecord, radius_m: f64) -> PointCloud {
    let to_reference = reference.planar().inverse();
    let mut submap = PointCloud::default();
    for (cloud, pose) in scans {
        let (dx, dy) = (pose.x - reference.x, pose.y - reference.y);
        if dx.hypot(dy) > radius_m {
            continue;
        }
        let motion = pose.planar().compose(&to_reference);
        let dz = (pose.z - reference.z) as f32;
        let mut moved = cloud.transformed(&motion);
        for p in &mut moved.points {
            p.z += dz;
        }
        submap.extend(&moved);
    }
    submap
}
