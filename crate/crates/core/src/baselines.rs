//! K-means and DBSCAN on an embedding, used as comparison baselines.

use rand::Rng as _;
use rayon::prelude::*;
use thiserror::Error;

use crate::density::nearest_rank;
use crate::isomap::Embedding;
use crate::matrix::SquareMatrix;
use crate::metrics::{accuracy, nmi, MetricsError};
use crate::quality::Partition;
use crate::seed::{derive_seed, rng};

/// Stream id for k-means restart sub-seeds.
const KMEANS_STREAM: u64 = 0x6b6d;

/// Eps candidates (percentiles of pairwise distance) for the DBSCAN grid.
pub const DBSCAN_EPS_PERCENTILES: [f64; 10] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
/// MinPts candidates for the DBSCAN grid.
pub const DBSCAN_MIN_PTS: [usize; 5] = [2, 3, 4, 5, 6];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("k = {k} must be in 1..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("eps must be positive, got {0}")]
    Eps(f64),
    #[error("min_pts must be at least 1")]
    MinPts,
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KmeansSpec {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
}

impl KmeansSpec {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, seed, restarts: 10, max_iters: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub partition: Partition,
    pub centroids: Vec<Vec<f64>>,
    pub sse: f64,
    /// Within-cluster sum of squares after each iteration of the winning run.
    pub sse_history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_centroid(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(c, m)| (c, sq_dist(p, m)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn plus_plus_init(e: &Embedding, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = e.len();
    let mut r = rng(seed);
    let mut chosen = vec![r.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(e.point(i), e.point(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = r.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[r.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, slot) in d2.iter_mut().enumerate() {
            *slot = slot.min(sq_dist(e.point(i), e.point(next)));
        }
    }
    chosen.into_iter().map(|i| e.point(i).to_vec()).collect()
}

struct Run {
    labels: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    sse: f64,
    history: Vec<f64>,
}

fn lloyd(e: &Embedding, k: usize, max_iters: usize, seed: u64) -> Run {
    let n = e.len();
    let dim = e.dim();
    let mut centroids = plus_plus_init(e, k, seed);
    let mut labels = vec![usize::MAX; n];
    let mut history = Vec::new();
    for _ in 0..max_iters.max(1) {
        let mut changed = false;
        for i in 0..n {
            let (c, _) = nearest_centroid(e.point(i), &centroids);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        // An empty cluster takes over the point farthest from its centroid.
        loop {
            let mut counts = vec![0usize; k];
            labels.iter().for_each(|&l| counts[l] += 1);
            let Some(empty) = counts.iter().position(|&c| c == 0) else { break };
            let far = (0..n)
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| {
                    let da = sq_dist(e.point(a), &centroids[labels[a]]);
                    let db = sq_dist(e.point(b), &centroids[labels[b]]);
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("k <= n leaves a donor cluster");
            labels[far] = empty;
            centroids[empty] = e.point(far).to_vec();
            changed = true;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for (s, x) in sums[labels[i]].iter_mut().zip(e.point(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
        }
        let sse: f64 = (0..n).map(|i| sq_dist(e.point(i), &centroids[labels[i]])).sum();
        history.push(sse);
        if !changed {
            break;
        }
    }
    let sse = *history.last().expect("at least one iteration");
    Run { labels, centroids, sse, history }
}

/// Lloyd's algorithm from k-means++ seeding, best of `restarts` runs by
/// within-cluster sum of squares. Restart `r` uses sub-seed
/// `derive_seed(seed, KMEANS_STREAM, r)`.
pub fn kmeans(e: &Embedding, spec: &KmeansSpec) -> Result<KmeansResult, BaselineError> {
    let n = e.len();
    if spec.k == 0 || spec.k > n {
        return Err(BaselineError::InvalidK { k: spec.k, n });
    }
    let runs: Vec<Run> = (0..spec.restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| lloyd(e, spec.k, spec.max_iters, derive_seed(spec.seed, KMEANS_STREAM, r)))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|best, cur| if cur.sse < best.sse { cur } else { best })
        .expect("at least one restart");
    Ok(KmeansResult {
        partition: Partition::new(best.labels).expect("no cluster is left empty"),
        centroids: best.centroids,
        sse: best.sse,
        sse_history: best.history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanSpec {
    pub eps: f64,
    pub min_pts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbscanResult {
    /// Clusters first, then every noise point as its own community.
    pub partition: Partition,
    pub clusters: usize,
    pub noise: usize,
}

/// DBSCAN over a precomputed distance matrix. A point is core when at least
/// `min_pts` points (itself included) lie within `eps`. Clusters are the
/// components of core points linked within `eps`; each border point joins the
/// cluster of its nearest core point. Noise points become singletons.
pub fn dbscan_with_distances(d: &SquareMatrix, spec: &DbscanSpec) -> Result<DbscanResult, BaselineError> {
    if !(spec.eps > 0.0) {
        return Err(BaselineError::Eps(spec.eps));
    }
    if spec.min_pts == 0 {
        return Err(BaselineError::MinPts);
    }
    let n = d.dim();
    let core: Vec<bool> = (0..n).map(|i| d.row(i).iter().filter(|&&x| x <= spec.eps).count() >= spec.min_pts).collect();

    let mut cluster = vec![usize::MAX; n];
    let mut clusters = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if !core[s] || cluster[s] != usize::MAX {
            continue;
        }
        cluster[s] = clusters;
        stack.push(s);
        while let Some(v) = stack.pop() {
            for w in 0..n {
                if core[w] && cluster[w] == usize::MAX && d.get(v, w) <= spec.eps {
                    cluster[w] = clusters;
                    stack.push(w);
                }
            }
        }
        clusters += 1;
    }
    for v in 0..n {
        if core[v] {
            continue;
        }
        let nearest = (0..n)
            .filter(|&c| core[c] && d.get(v, c) <= spec.eps)
            .min_by(|&a, &b| d.get(v, a).total_cmp(&d.get(v, b)).then(a.cmp(&b)));
        if let Some(c) = nearest {
            cluster[v] = cluster[c];
        }
    }
    let mut noise = 0;
    for label in cluster.iter_mut() {
        if *label == usize::MAX {
            *label = clusters + noise;
            noise += 1;
        }
    }
    Ok(DbscanResult { partition: Partition::new(cluster).expect("labels are contiguous"), clusters, noise })
}

pub fn dbscan(e: &Embedding, spec: &DbscanSpec) -> Result<DbscanResult, BaselineError> {
    dbscan_with_distances(&e.distance_matrix(), spec)
}

/// Best scores over the DBSCAN parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DbscanGridResult {
    pub best_nmi: f64,
    pub best_acc: f64,
    /// Parameters and community count of the highest-NMI cell.
    pub nmi_spec: DbscanSpec,
    pub nmi_k: usize,
}

/// Runs the 10 × 5 grid (eps at distance percentiles 1..=10, min_pts 2..=6)
/// and keeps the highest NMI and highest accuracy against `truth`.
pub fn dbscan_grid(e: &Embedding, truth: &[usize]) -> Result<DbscanGridResult, BaselineError> {
    let d = e.distance_matrix();
    let mut sorted: Vec<f64> = d.upper_triangle().collect();
    sorted.sort_by(f64::total_cmp);
    let mut cells = Vec::new();
    for &p in &DBSCAN_EPS_PERCENTILES {
        let eps = nearest_rank(&sorted, p).max(f64::MIN_POSITIVE);
        for &min_pts in &DBSCAN_MIN_PTS {
            cells.push(DbscanSpec { eps, min_pts });
        }
    }
    let scored: Vec<(DbscanSpec, f64, f64, usize)> = cells
        .into_par_iter()
        .map(|spec| {
            let res = dbscan_with_distances(&d, &spec)?;
            let labels = res.partition.labels();
            Ok((spec, nmi(truth, labels)?, accuracy(truth, labels)?, res.partition.k()))
        })
        .collect::<Result<_, BaselineError>>()?;
    let mut best = scored[0];
    let mut best_acc = scored[0].2;
    for &cell in &scored[1..] {
        if cell.1 > best.1 {
            best = cell;
        }
        best_acc = best_acc.max(cell.2);
    }
    Ok(DbscanGridResult { best_nmi: best.1, best_acc, nmi_spec: best.0, nmi_k: best.3 })
}
