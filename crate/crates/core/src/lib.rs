//! Global heading estimation between gravity-aligned point clouds.
//!
//! Both clouds are rasterized into binary bird's-eye-view images, Radon
//! transformed into sinograms, and reduced to translation-invariant
//! descriptors by taking the magnitude spectrum of every sinogram row. The
//! heading is the circular cross-correlation peak of the two descriptors along
//! the angle axis, refined to sub-bin precision, with the half-turn ambiguity
//! of magnitude spectra resolved by phase correlation in image space.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod angle;
pub mod bench;
pub mod bev;
pub mod cloud;
pub mod correlate;
pub mod descriptor;
pub mod error;
pub mod estimator;
pub mod eval;
pub mod npy;
pub mod pgm;
pub mod phase;
pub mod pipeline;
pub mod radon;
pub mod scalar;
pub mod stats;
pub mod toycase;

pub use angle::{angular_error_deg, normalize_deg};
pub use bev::{rasterize_bev, transform_bev, BevImage, GridSpec, Interp};
pub use cloud::{load_pointcloud, load_pose_table, remove_ground, CloudFormat, GroundSlab, Point, PointCloud, PoseRecord};
pub use correlate::{circular_correlate, refine_peak};
pub use descriptor::{dft_magnitude_rows, DescriptorConfig, Normalization};
pub use error::{Error, Result};
pub use estimator::{estimate_heading, EstimatorConfig};
pub use phase::{disambiguate_halfturn, DisambiguationConfig, HalfTurnDecision};
pub use pipeline::PipelineConfig;
pub use radon::{radon_transform, Projector, RadonSpec};
pub use scalar::Real;
pub use stats::ErrorStats;

pub type Raster = bev::Raster<f64>;
pub type Raster32 = bev::Raster<f32>;
pub type Sinogram = radon::Sinogram<f64>;
pub type Sinogram32 = radon::Sinogram<f32>;
pub type InvariantDescriptor = descriptor::InvariantDescriptor<f64>;
pub type InvariantDescriptor32 = descriptor::InvariantDescriptor<f32>;
pub type CorrelationResult = correlate::CorrelationResult<f64>;
pub type CorrelationResult32 = correlate::CorrelationResult<f32>;
pub type HeadingEstimate = estimator::HeadingEstimate<f64>;
pub type HeadingEstimate32 = estimator::HeadingEstimate<f32>;
pub type HeadingEstimator = estimator::HeadingEstimator<f64>;
pub type HeadingEstimator32 = estimator::HeadingEstimator<f32>;
pub type Pipeline = pipeline::Pipeline<f64>;
pub type Pipeline32 = pipeline::Pipeline<f32>;
