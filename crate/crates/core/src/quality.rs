//! Partition density and the community-count sweep.
//!
//! For a community with `n_c` nodes and `m_c` induced edges the local density
//! is `(m_c - (n_c - 1)) / ((n_c - 1)(n_c - 2) / 2)`: 0 for a tree, 1 for a
//! clique. The network score is the node-weighted mean of the local values,
//! optionally divided by `sqrt(k)` to penalize fragmentation.

use rayon::prelude::*;
use thiserror::Error;

use crate::density::{assign, top_centers, DensityError, DensityProfile};
use crate::graph::Graph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("labels must be contiguous from 0; community {0} is empty")]
    EmptyCommunity(usize),
    #[error("partition covers {labels} nodes but the graph has {nodes}")]
    SizeMismatch { labels: usize, nodes: usize },
    #[error("k_max {k_max} outside 2..={n}")]
    KMax { k_max: usize, n: usize },
    #[error(transparent)]
    Density(#[from] DensityError),
}

/// Node-to-community labeling with contiguous labels `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Validates that labels are exactly `0..k` with no empty community.
    pub fn new(labels: Vec<usize>) -> Result<Self, PartitionError> {
        let k = labels.iter().max().map_or(0, |&m| m + 1);
        let mut seen = vec![false; k];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(c) = seen.iter().position(|&s| !s) {
            return Err(PartitionError::EmptyCommunity(c));
        }
        Ok(Self { labels, k })
    }

    /// Relabels arbitrary ids to `0..k` in order of first appearance.
    pub fn canonical<T: Eq + std::hash::Hash + Copy>(raw: &[T]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|x| {
                let next = map.len();
                *map.entry(*x).or_insert(next)
            })
            .collect();
        Self { labels, k: map.len() }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// `(n_c, m_c)` for every community, edges counted in `g`.
    pub fn community_stats(&self, g: &Graph) -> Result<Vec<(usize, usize)>, PartitionError> {
        if self.labels.len() != g.node_count() {
            return Err(PartitionError::SizeMismatch { labels: self.labels.len(), nodes: g.node_count() });
        }
        let edges = g.induced_edge_counts(&self.labels, self.k);
        Ok(self.sizes().into_iter().zip(edges).collect())
    }
}

/// Local density of one community from its node and edge counts. Groups of
/// one or two nodes score 0.
pub fn local_density_value(nodes: usize, edges: usize) -> f64 {
    if nodes <= 2 {
        return 0.0;
    }
    let n = nodes as f64;
    let m = edges as f64;
    (m - (n - 1.0)) / (n * (n - 1.0) / 2.0 - (n - 1.0))
}

pub fn local_partition_density(g: &Graph, part: &Partition, c: usize) -> Result<f64, PartitionError> {
    let stats = part.community_stats(g)?;
    let (nodes, edges) = stats[c];
    Ok(local_density_value(nodes, edges))
}

/// Whole-network partition density; `penalized` divides by `sqrt(k)`.
pub fn partition_density(g: &Graph, part: &Partition, penalized: bool) -> Result<f64, PartitionError> {
    let stats = part.community_stats(g)?;
    Ok(density_from_stats(&stats, g.node_count(), penalized))
}

fn density_from_stats(stats: &[(usize, usize)], total: usize, penalized: bool) -> f64 {
    let sum: f64 = stats
        .iter()
        .filter(|&&(nc, _)| nc > 2)
        .map(|&(nc, mc)| {
            let n = nc as f64;
            n * (mc as f64 - (n - 1.0)) / ((n - 2.0) * (n - 1.0))
        })
        .sum();
    let density = 2.0 * sum / total as f64;
    if penalized {
        density / (stats.len() as f64).sqrt()
    } else {
        density
    }
}

/// One evaluated community count.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub k: usize,
    pub density: f64,
    pub partition: Partition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub k_star: usize,
}

impl SweepResult {
    pub fn best(&self) -> &SweepRecord {
        self.records.iter().find(|r| r.k == self.k_star).expect("k_star is one of the records")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,D\n");
        for r in &self.records {
            out.push_str(&format!("{},{}\n", r.k, r.density));
        }
        out
    }
}

/// Default upper end of the sweep: `min(ceil(2 sqrt(n)), n - 1)`.
pub fn default_k_max(n: usize) -> usize {
    let bound = (2.0 * (n as f64).sqrt()).ceil() as usize;
    bound.min(n.saturating_sub(1)).max(2)
}

/// Evaluates the penalized density for `k = 2..=k_max` (centers are the top-k
/// gamma nodes) and returns the smallest `k` attaining the maximum.
pub fn select_k(g: &Graph, profile: &DensityProfile, k_max: usize) -> Result<SweepResult, PartitionError> {
    let n = g.node_count();
    if k_max < 2 || k_max > n {
        return Err(PartitionError::KMax { k_max, n });
    }
    let records: Vec<SweepRecord> = (2..=k_max)
        .into_par_iter()
        .map(|k| {
            let labels = assign(profile, top_centers(profile, k))?;
            let partition = Partition { labels, k };
            let density = partition_density(g, &partition, true)?;
            Ok(SweepRecord { k, density, partition })
        })
        .collect::<Result<_, PartitionError>>()?;
    let mut k_star = records[0].k;
    let mut best = records[0].density;
    for r in &records[1..] {
        if r.density > best {
            best = r.density;
            k_star = r.k;
        }
    }
    Ok(SweepResult { records, k_star })
}
