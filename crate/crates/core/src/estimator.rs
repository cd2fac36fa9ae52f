//! End-to-end heading estimation between two BEV images.

use serde::Serialize;

use crate::angle::normalize_deg;
use crate::bev::{BevImage, Raster};
use crate::correlate::{refine_peak, CorrelationResult, Correlator};
use crate::descriptor::{DescriptorConfig, DescriptorExtractor, InvariantDescriptor};
use crate::error::{Error, Result};
use crate::phase::{DisambiguationConfig, HalfTurnDecision, HalfTurnResolver};
use crate::radon::{radon_transform, RadonSpec, Sinogram};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub radon: RadonSpec,
    pub descriptor: DescriptorConfig,
    pub refine: bool,
    /// Correlate raw sinogram rows instead of their magnitude spectra.
    pub ablation_raw_sinogram: bool,
    pub disambiguation: DisambiguationConfig,
}

impl EstimatorConfig {
    pub fn for_grid(size_px: usize) -> Self {
        EstimatorConfig {
            radon: RadonSpec::for_grid(size_px),
            descriptor: DescriptorConfig::default(),
            refine: true,
            ablation_raw_sinogram: false,
            disambiguation: DisambiguationConfig::default(),
        }
    }
}

/// Per-image intermediate products.
#[derive(Debug, Clone)]
pub struct Features<T> {
    pub sinogram: Sinogram<T>,
    pub descriptor: InvariantDescriptor<T>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeadingEstimate<T> {
    /// Heading in `[0, 360)` such that `bp(u) ≈ bq(R(angle) u + t)`.
    pub angle_deg: f64,
    pub confidence: f64,
    pub correlation: CorrelationResult<T>,
    pub half_turn: HalfTurnDecision,
}

/// Holds the configuration and the FFT plans for one image size.
///
/// Plans are immutable after construction, so one estimator can serve many
/// threads at once.
pub struct HeadingEstimator<T: Real> {
    config: EstimatorConfig,
    image_size: usize,
    extractor: DescriptorExtractor<T>,
    correlator: Correlator<T>,
    resolver: HalfTurnResolver<T>,
}

impl<T: Real> HeadingEstimator<T> {
    pub fn new(config: EstimatorConfig, image_size: usize) -> Result<Self> {
        if config.radon.n_angles() < 3 {
            return Err(Error::InvalidArgument("need at least 3 angles".into()));
        }
        Ok(HeadingEstimator {
            config,
            image_size,
            extractor: DescriptorExtractor::new(config.descriptor, config.radon.n_offsets()),
            correlator: Correlator::new(config.radon.n_angles()),
            resolver: HalfTurnResolver::new(config.disambiguation, image_size)?,
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn image_size(&self) -> usize {
        self.image_size
    }

    /// Sinogram and descriptor of one image.
    pub fn features(&self, image: &Raster<T>) -> Result<Features<T>> {
        if image.size() != self.image_size {
            return Err(Error::ShapeMismatch(format!(
                "estimator built for {0}x{0} images, got {1}x{1}",
                self.image_size,
                image.size()
            )));
        }
        let sinogram = radon_transform(image, &self.config.radon);
        let descriptor = if self.config.ablation_raw_sinogram {
            InvariantDescriptor::from_sinogram_rows(&sinogram)
        } else {
            self.extractor.extract(&sinogram)?
        };
        Ok(Features {
            sinogram,
            descriptor,
        })
    }

    /// Correlation, sub-bin refinement and half-turn resolution on precomputed features.
    pub fn estimate_from_features(
        &self,
        query: &Raster<T>,
        query_features: &Features<T>,
        reference: &Raster<T>,
        reference_features: &Features<T>,
    ) -> Result<HeadingEstimate<T>> {
        let mut correlation = self
            .correlator
            .correlate(&query_features.descriptor, &reference_features.descriptor)?;
        let base = if self.config.refine {
            let refined = refine_peak(&correlation.scores, correlation.best_bin);
            correlation.refined_angle_deg = Some(refined);
            refined
        } else {
            correlation.best_angle_deg
        };
        let half_turn = self.resolver.resolve(query, reference, correlation.best_angle_deg)?;
        correlation.chosen_deg = half_turn.chosen_deg;
        let flipped = half_turn.chosen_deg != correlation.best_angle_deg;
        let angle_deg = normalize_deg(if flipped { base + 180.0 } else { base });
        Ok(HeadingEstimate {
            angle_deg,
            confidence: correlation.confidence,
            correlation,
            half_turn,
        })
    }

    pub fn estimate_rasters(&self, query: &Raster<T>, reference: &Raster<T>) -> Result<HeadingEstimate<T>> {
        if query.is_empty() {
            return Err(Error::EmptyScene("query image has no occupied cells".into()));
        }
        if reference.is_empty() {
            return Err(Error::EmptyScene("reference image has no occupied cells".into()));
        }
        let fq = self.features(query)?;
        let fp = self.features(reference)?;
        self.estimate_from_features(query, &fq, reference, &fp)
    }

    /// Heading of `reference` relative to `query`: `reference(u) ≈ query(R(angle) u + t)`.
    pub fn estimate(&self, query: &BevImage, reference: &BevImage) -> Result<HeadingEstimate<T>> {
        check_same_grid(query, reference)?;
        self.estimate_rasters(&query.to_raster(), &reference.to_raster())
    }
}

fn check_same_grid(a: &BevImage, b: &BevImage) -> Result<()> {
    if a.spec() != b.spec() {
        return Err(Error::ShapeMismatch(format!(
            "BEV grids differ: {:?} vs {:?}",
            a.spec(),
            b.spec()
        )));
    }
    Ok(())
}

/// Builds an estimator for the images' grid and runs it once.
pub fn estimate_heading<T: Real>(query: &BevImage, reference: &BevImage, config: &EstimatorConfig) -> Result<HeadingEstimate<T>> {
    check_same_grid(query, reference)?;
    HeadingEstimator::new(*config, query.size())?.estimate(query, reference)
}
