//! Cloud-to-heading pipeline shared by the toycase, the evaluator, the benchmark and the CLI.

use crate::bev::{rasterize_where, BevImage, GridSpec, Raster};
use crate::cloud::{GroundSlab, PointCloud};
use crate::error::Result;
use crate::estimator::{EstimatorConfig, HeadingEstimate, HeadingEstimator};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub grid: GridSpec,
    pub slab: GroundSlab,
    pub estimator: EstimatorConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let grid = GridSpec::default();
        PipelineConfig {
            grid,
            slab: GroundSlab::default(),
            estimator: EstimatorConfig::for_grid(grid.size_px()),
        }
    }
}

impl PipelineConfig {
    /// Default settings on a different grid; the offset axis follows the grid size.
    pub fn with_grid(grid: GridSpec) -> Self {
        PipelineConfig {
            grid,
            slab: GroundSlab::default(),
            estimator: EstimatorConfig::for_grid(grid.size_px()),
        }
    }
}

pub struct Pipeline<T: Real> {
    config: PipelineConfig,
    estimator: HeadingEstimator<T>,
}

impl<T: Real> Pipeline<T> {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        Ok(Pipeline {
            estimator: HeadingEstimator::new(config.estimator, config.grid.size_px())?,
            config,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn estimator(&self) -> &HeadingEstimator<T> {
        &self.estimator
    }

    /// Ground removal followed by rasterization.
    pub fn bev(&self, cloud: &PointCloud) -> BevImage {
        let slab = self.config.slab;
        rasterize_where(cloud, &self.config.grid, |p| slab.keeps(p))
    }

    pub fn estimate_clouds(&self, query: &PointCloud, reference: &PointCloud) -> Result<HeadingEstimate<T>> {
        self.estimator.estimate(&self.bev(query), &self.bev(reference))
    }

    /// Estimation on BEVs optionally weighted by per-pixel masks.
    pub fn estimate_masked(
        &self,
        query: &BevImage,
        query_mask: Option<&Raster<T>>,
        reference: &BevImage,
        reference_mask: Option<&Raster<T>>,
    ) -> Result<HeadingEstimate<T>> {
        let weigh = |image: &BevImage, mask: Option<&Raster<T>>| match mask {
            Some(m) => image.masked(m),
            None => Ok(image.to_raster()),
        };
        if query.spec() != reference.spec() {
            return Err(crate::Error::ShapeMismatch(format!(
                "BEV grids differ: {:?} vs {:?}",
                query.spec(),
                reference.spec()
            )));
        }
        self.estimator
            .estimate_rasters(&weigh(query, query_mask)?, &weigh(reference, reference_mask)?)
    }
}
