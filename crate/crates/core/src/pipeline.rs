//! The full detection pipeline: similarity → distance → Isomap embedding →
//! density peaks → partition-density sweep over the community count.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{density_profile_at_percentile, DensityError, DensityProfile, DEFAULT_DC_PERCENTILE};
use crate::graph::Graph;
use crate::isomap::{isomap_with_geodesics, Embedding, GeodesicMatrix, IsomapError, MIN_PIPELINE_NODES};
use crate::quality::{default_k_max, select_k, PartitionError, SweepResult};
use crate::similarity::{similarity_matrix, to_distance, Measure, SimilarityError};

pub const DEFAULT_LAMBDA: usize = 50;
pub const DEFAULT_DIM: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("graph too small: {n} nodes (need at least {MIN_PIPELINE_NODES})")]
    TooSmall { n: usize },
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Isomap(#[from] IsomapError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoFdpConfig {
    pub measure: Measure,
    /// Neighborhood size of the Isomap graph; clamped to `n - 1`.
    pub lambda: usize,
    /// Embedding dimension.
    pub dim: usize,
    pub dc_percentile: f64,
    /// Upper end of the community-count sweep; `None` uses [`default_k_max`].
    pub k_max: Option<usize>,
}

impl Default for IsoFdpConfig {
    fn default() -> Self {
        Self {
            measure: Measure::Structure,
            lambda: DEFAULT_LAMBDA,
            dim: DEFAULT_DIM,
            dc_percentile: DEFAULT_DC_PERCENTILE,
            k_max: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub similarity: Duration,
    pub isomap: Duration,
    pub density: Duration,
    pub sweep: Duration,
}

#[derive(Debug, Clone)]
pub struct Embedded {
    pub embedding: Embedding,
    pub geodesics: GeodesicMatrix,
}

/// Similarity, distance transform, and Isomap for `g`.
pub fn embed(g: &Graph, cfg: &IsoFdpConfig, timings: &mut StageTimings) -> Result<Embedded, PipelineError> {
    let n = g.node_count();
    if n < MIN_PIPELINE_NODES {
        return Err(PipelineError::TooSmall { n });
    }
    let t = Instant::now();
    let distances = to_distance(&similarity_matrix(g, cfg.measure))?;
    timings.similarity = t.elapsed();
    let t = Instant::now();
    let lambda = cfg.lambda.min(n - 1);
    let dim = cfg.dim.min(n - 1);
    let (embedding, geodesics) = isomap_with_geodesics(&distances, lambda, dim)?;
    timings.isomap = t.elapsed();
    Ok(Embedded { embedding, geodesics })
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub embedding: Embedding,
    pub profile: DensityProfile,
    pub sweep: SweepResult,
    pub timings: StageTimings,
}

impl Detection {
    pub fn k_star(&self) -> usize {
        self.sweep.k_star
    }

    pub fn labels(&self) -> &[usize] {
        self.sweep.best().partition.labels()
    }
}

/// Density peaks and the community-count sweep on an existing embedding.
pub fn detect_on_embedding(
    g: &Graph,
    embedding: Embedding,
    cfg: &IsoFdpConfig,
    mut timings: StageTimings,
) -> Result<Detection, PipelineError> {
    let t = Instant::now();
    let profile = density_profile_at_percentile(&embedding, cfg.dc_percentile)?;
    timings.density = t.elapsed();
    let t = Instant::now();
    let k_max = cfg.k_max.unwrap_or_else(|| default_k_max(g.node_count()));
    let sweep = select_k(g, &profile, k_max)?;
    timings.sweep = t.elapsed();
    Ok(Detection { embedding, profile, sweep, timings })
}

/// Runs the whole pipeline.
pub fn detect(g: &Graph, cfg: &IsoFdpConfig) -> Result<Detection, PipelineError> {
    let mut timings = StageTimings::default();
    let embedded = embed(g, cfg, &mut timings)?;
    detect_on_embedding(g, embedded.embedding, cfg, timings)
}
