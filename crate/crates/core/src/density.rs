//! Density-peaks statistics on an embedding: local density, separation from
//! the nearest denser point, the combined center score, and the single-pass
//! assignment that lets each point follow its nearest denser neighbor.

use rayon::prelude::*;
use thiserror::Error;

use crate::isomap::Embedding;

/// Default cutoff percentile of the pairwise-distance distribution.
pub const DEFAULT_DC_PERCENTILE: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error("percentile {0} outside (0, 100]")]
    Percentile(f64),
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("cutoff distance must be positive, got {0}")]
    Cutoff(f64),
    #[error("center {0} listed more than once")]
    DuplicateCenter(usize),
    #[error("center {index} out of range for {n} points")]
    CenterOutOfRange { index: usize, n: usize },
    #[error("node {0} cannot reach any center through its denser neighbors")]
    Unreachable(usize),
    #[error("at least one center is required")]
    NoCenters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub rho: Vec<usize>,
    pub delta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub nearest_higher: Vec<Option<usize>>,
    pub d_c: f64,
    /// Node indices from densest to sparsest (ties to the smaller index).
    pub density_order: Vec<usize>,
    /// Node indices by descending gamma (ties to the smaller index).
    pub gamma_ranking: Vec<usize>,
}

impl DensityProfile {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }
}

/// Nearest-rank percentile of all `n(n-1)/2` pairwise embedded distances.
pub fn select_dc(e: &Embedding, percentile: f64) -> Result<f64, DensityError> {
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(DensityError::Percentile(percentile));
    }
    let n = e.len();
    if n < 2 {
        return Err(DensityError::TooFewPoints(n));
    }
    let mut distances: Vec<f64> =
        (0..n).into_par_iter().flat_map_iter(|i| (i + 1..n).map(move |j| e.distance(i, j))).collect();
    distances.sort_by(f64::total_cmp);
    Ok(nearest_rank(&distances, percentile))
}

/// Nearest-rank percentile of an ascending slice.
pub(crate) fn nearest_rank(sorted: &[f64], percentile: f64) -> f64 {
    let rank = (percentile / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Number of other points strictly closer than `d_c`.
pub fn local_density(e: &Embedding, d_c: f64) -> Vec<usize> {
    let n = e.len();
    (0..n).into_par_iter().map(|i| (0..n).filter(|&j| j != i && e.distance(i, j) < d_c).count()).collect()
}

/// Strict total order on nodes: higher rho first, then smaller index.
pub fn density_order(rho: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rho.len()).collect();
    order.sort_by(|&a, &b| rho[b].cmp(&rho[a]).then(a.cmp(&b)));
    order
}

/// For each node, the distance to (and identity of) the closest node ranked
/// denser. The top-ranked node gets its largest distance to any node and no
/// pointer.
pub fn separation(e: &Embedding, rho: &[usize]) -> (Vec<f64>, Vec<Option<usize>>) {
    let order = density_order(rho);
    let mut rank = vec![0; rho.len()];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    let results: Vec<(f64, Option<usize>)> = (0..rho.len())
        .into_par_iter()
        .map(|i| {
            if rank[i] == 0 {
                let far = (0..rho.len()).map(|j| e.distance(i, j)).fold(0.0, f64::max);
                return (far, None);
            }
            let mut best = (f64::INFINITY, usize::MAX);
            for &j in &order[..rank[i]] {
                let d = e.distance(i, j);
                if d < best.0 || (d == best.0 && j < best.1) {
                    best = (d, j);
                }
            }
            (best.0, Some(best.1))
        })
        .collect();
    results.into_iter().unzip()
}

/// `gamma = rho · delta` with a descending ranking (ties to smaller index).
pub fn gamma_scores(rho: &[usize], delta: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let gamma: Vec<f64> = rho.iter().zip(delta).map(|(&r, &d)| r as f64 * d).collect();
    let mut ranking: Vec<usize> = (0..gamma.len()).collect();
    ranking.sort_by(|&a, &b| gamma[b].total_cmp(&gamma[a]).then(a.cmp(&b)));
    (gamma, ranking)
}

/// Computes the full profile for a given cutoff.
pub fn density_profile(e: &Embedding, d_c: f64) -> Result<DensityProfile, DensityError> {
    if !(d_c > 0.0) {
        return Err(DensityError::Cutoff(d_c));
    }
    if e.len() < 2 {
        return Err(DensityError::TooFewPoints(e.len()));
    }
    let rho = local_density(e, d_c);
    let (delta, nearest_higher) = separation(e, &rho);
    let (gamma, gamma_ranking) = gamma_scores(&rho, &delta);
    let density_order = density_order(&rho);
    Ok(DensityProfile { rho, delta, gamma, nearest_higher, d_c, density_order, gamma_ranking })
}

/// Profile with the cutoff picked by [`select_dc`].
pub fn density_profile_at_percentile(e: &Embedding, percentile: f64) -> Result<DensityProfile, DensityError> {
    let d_c = select_dc(e, percentile)?;
    // Degenerate embeddings (all points coincide) have a zero cutoff; any
    // positive value gives the same counts there.
    density_profile(e, if d_c > 0.0 { d_c } else { f64::MIN_POSITIVE })
}

/// Labels centers `0..k` in the given order, then walks nodes from densest
/// to sparsest, each inheriting the label of its nearest denser neighbor.
pub fn assign(profile: &DensityProfile, centers: &[usize]) -> Result<Vec<usize>, DensityError> {
    let n = profile.len();
    if centers.is_empty() {
        return Err(DensityError::NoCenters);
    }
    let mut labels = vec![usize::MAX; n];
    for (label, &c) in centers.iter().enumerate() {
        if c >= n {
            return Err(DensityError::CenterOutOfRange { index: c, n });
        }
        if labels[c] != usize::MAX {
            return Err(DensityError::DuplicateCenter(c));
        }
        labels[c] = label;
    }
    for &v in &profile.density_order {
        if labels[v] != usize::MAX {
            continue;
        }
        match profile.nearest_higher[v] {
            Some(h) if labels[h] != usize::MAX => labels[v] = labels[h],
            _ => return Err(DensityError::Unreachable(v)),
        }
    }
    Ok(labels)
}

/// The first `k` entries of the gamma ranking.
pub fn top_centers(profile: &DensityProfile, k: usize) -> &[usize] {
    &profile.gamma_ranking[..k.min(profile.len())]
}
