//! Isomap: symmetric k-nearest-neighbor graph over a distance matrix,
//! all-pairs geodesic distances on that graph, and classical MDS.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use thiserror::Error;

use crate::matrix::SquareMatrix;
use crate::similarity::DistanceMatrix;

/// Smallest node count accepted by the full pipeline.
pub const MIN_PIPELINE_NODES: usize = 4;

/// Eigenvalues at or below this fraction of the largest are treated as zero.
pub const POSITIVE_EIGENVALUE_TOLERANCE: f64 = 1e-10;

/// Maximum accepted `‖Bv − μv‖ / ‖B‖` for a retained eigenpair.
pub const EIGEN_RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsomapError {
    #[error("neighborhood size {lambda} outside 1..={max}")]
    NeighborhoodSize { lambda: usize, max: usize },
    #[error("node {0} has no finite-distance partner")]
    NoFinitePartner(usize),
    #[error("neighbor graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("embedding dimension must be at least 1")]
    ZeroDimension,
    #[error("embedding dimension {p} exceeds n - 1 = {max}")]
    DimensionTooLarge { p: usize, max: usize },
    #[error("graph too small: {n} nodes (need at least {MIN_PIPELINE_NODES})")]
    TooSmall { n: usize },
    #[error("eigenpair {index} residual {residual:e} exceeds tolerance")]
    EigenResidual { index: usize, residual: f64 },
}

/// Weighted undirected neighbor graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
    lambda: usize,
    /// Edges added to join components, `(u, v, weight)` with `u < v`.
    pub augmented: Vec<(usize, usize, f64)>,
}

impl NeighborGraph {
    /// Builds a graph directly from weighted edges; used by tests and oracles.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], lambda: usize) -> Self {
        let mut ng = NeighborGraph { adjacency: vec![Vec::new(); n], lambda, augmented: Vec::new() };
        for &(u, v, w) in edges {
            ng.insert(u, v, w);
        }
        ng
    }

    fn insert(&mut self, u: usize, v: usize, w: f64) {
        if u == v || self.adjacency[u].iter().any(|&(x, _)| x == v) {
            return;
        }
        let pos = self.adjacency[u].partition_point(|&(x, _)| x < v);
        self.adjacency[u].insert(pos, (v, w));
        let pos = self.adjacency[v].partition_point(|&(x, _)| x < u);
        self.adjacency[v].insert(pos, (u, w));
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    /// Edges as `(u, v, weight)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (u, list) in self.adjacency.iter().enumerate() {
            for &(v, w) in list {
                if u < v {
                    out.push((u, v, w));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut labels = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if labels[s] != usize::MAX {
                continue;
            }
            labels[s] = next;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &(w, _) in &self.adjacency[v] {
                    if labels[w] == usize::MAX {
                        labels[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        labels
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(labels: &[usize]) -> Self {
        // Seed with the existing component structure.
        let mut first = std::collections::HashMap::new();
        let parent = labels.iter().enumerate().map(|(i, &l)| *first.entry(l).or_insert(i)).collect();
        Self { parent }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Symmetric k-NN graph: `(i, j)` is an edge when `j` is among the `lambda`
/// nearest finite-distance partners of `i` or vice versa (distance ties go
/// to the smaller index). Disconnected results are joined by repeatedly
/// adding the globally shortest finite edge between two components. If no
/// finite edge joins the remaining components, their smallest-index nodes
/// are pairwise bridged with weight twice the largest finite geodesic.
pub fn build_neighbor_graph(d: &DistanceMatrix, lambda: usize) -> Result<NeighborGraph, IsomapError> {
    let n = d.dim();
    let max = n.saturating_sub(1);
    if lambda == 0 || lambda > max {
        return Err(IsomapError::NeighborhoodSize { lambda, max });
    }
    let nearest: Vec<Vec<(f64, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(f64, usize)> =
                (0..n).filter(|&j| j != i).map(|j| (d.get(i, j), j)).filter(|c| c.0.is_finite()).collect();
            cand.sort_by(by_distance_then_index);
            cand.truncate(lambda);
            cand
        })
        .collect();
    if let Some(i) = nearest.iter().position(Vec::is_empty) {
        return Err(IsomapError::NoFinitePartner(i));
    }
    let mut ng = NeighborGraph { adjacency: vec![Vec::new(); n], lambda, augmented: Vec::new() };
    for (i, list) in nearest.iter().enumerate() {
        for &(w, j) in list {
            ng.insert(i, j, w);
        }
    }

    let labels = ng.components();
    let mut components = labels.iter().max().map_or(0, |&m| m + 1);
    if components > 1 {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let w = d.get(i, j);
                if w.is_finite() && labels[i] != labels[j] {
                    pairs.push((w, i, j));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut uf = UnionFind::new(&labels);
        for (w, i, j) in pairs {
            if components == 1 {
                break;
            }
            if uf.union(i, j) {
                ng.insert(i, j, w);
                ng.augmented.push((i, j, w));
                components -= 1;
            }
        }
    }
    if components > 1 {
        bridge_components(&mut ng);
    }
    Ok(ng)
}

fn bridge_components(ng: &mut NeighborGraph) {
    let labels = ng.components();
    let mut reps: Vec<usize> = Vec::new();
    for (v, &l) in labels.iter().enumerate() {
        if l == reps.len() {
            reps.push(v);
        }
    }
    let diameter = (0..ng.node_count())
        .into_par_iter()
        .map(|s| dijkstra(ng, s).into_iter().filter(|x| x.is_finite()).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max);
    let weight = 2.0 * diameter.max(f64::MIN_POSITIVE);
    for (a, &u) in reps.iter().enumerate() {
        for &v in &reps[a + 1..] {
            ng.insert(u, v, weight);
            ng.augmented.push((u, v, weight));
        }
    }
}

#[derive(PartialEq)]
struct Frontier {
    dist: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths; unreachable nodes stay infinite.
pub fn dijkstra(ng: &NeighborGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; ng.node_count()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Frontier { dist: 0.0, node: source });
    while let Some(Frontier { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(next, w) in ng.neighbors(node) {
            let candidate = d + w;
            if candidate < dist[next] {
                dist[next] = candidate;
                heap.push(Frontier { dist: candidate, node: next });
            }
        }
    }
    dist
}

/// All-pairs shortest-path distances over a connected neighbor graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicMatrix {
    pub values: SquareMatrix,
}

/// Runs Dijkstra from every source in parallel. Entry `(i, j)` is taken from
/// the run of `min(i, j)` so the result is exactly symmetric.
pub fn geodesic_distances(ng: &NeighborGraph) -> Result<GeodesicMatrix, IsomapError> {
    let n = ng.node_count();
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dijkstra(ng, s)).collect();
    if let Some(row) = rows.first() {
        let unreachable = row.iter().filter(|x| x.is_infinite()).count();
        if unreachable > 0 {
            let components = ng.components().into_iter().max().map_or(0, |m| m + 1);
            return Err(IsomapError::Disconnected { components });
        }
    }
    let values = SquareMatrix::from_fn(n, |i, j| if i <= j { rows[i][j] } else { rows[j][i] });
    Ok(GeodesicMatrix { values })
}

/// Low-dimensional coordinates, row-major `n × dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    coords: Vec<f64>,
    n: usize,
    dim: usize,
    /// Retained eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Set when fewer than the requested number of axes had positive spectrum.
    pub truncated: bool,
}

impl Embedding {
    /// Wraps raw points (each of equal length) as an embedding.
    pub fn from_points(points: &[Vec<f64>]) -> Self {
        let n = points.len();
        let dim = points.first().map_or(0, Vec::len);
        let coords: Vec<f64> = points.iter().flat_map(|p| p.iter().copied()).collect();
        assert_eq!(coords.len(), n * dim, "points must share a dimension");
        Self { coords, n, dim, eigenvalues: Vec::new(), truncated: false }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.point(i).iter().zip(self.point(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Every coordinate multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self { coords: self.coords.iter().map(|x| x * s).collect(), ..self.clone() }
    }

    /// Full pairwise Euclidean distance matrix.
    pub fn distance_matrix(&self) -> SquareMatrix {
        let rows: Vec<Vec<f64>> =
            (0..self.n).into_par_iter().map(|i| (0..self.n).map(|j| self.distance(i, j)).collect()).collect();
        SquareMatrix::from_rows(rows)
    }

    pub fn to_csv(&self, labels: &[String]) -> String {
        let mut out = String::from("node");
        for c in 1..=self.dim {
            out.push_str(&format!(",x{c}"));
        }
        out.push('\n');
        for (i, label) in labels.iter().enumerate().take(self.n) {
            out.push_str(label);
            for v in self.point(i) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Classical MDS: eigendecomposition of `B = -1/2 · X (D∘D) X` with the
/// centering matrix `X = I - (1/n) 1 1ᵀ`. Coordinates are `v · sqrt(μ)` for
/// the top `p` positive eigenpairs, each eigenvector signed so that its
/// largest-magnitude entry is nonnegative.
pub fn classical_mds(gd: &GeodesicMatrix, p: usize) -> Result<Embedding, IsomapError> {
    if p == 0 {
        return Err(IsomapError::ZeroDimension);
    }
    let n = gd.values.dim();
    if p > n.saturating_sub(1) {
        return Err(IsomapError::DimensionTooLarge { p, max: n.saturating_sub(1) });
    }
    let squared = SquareMatrix::from_fn(n, |i, j| {
        let x = gd.values.get(i, j);
        x * x
    });
    // X·S·X is S with row means, column means removed and the grand mean added back.
    let row_mean: Vec<f64> = (0..n).map(|i| squared.row(i).iter().sum::<f64>() / n as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (squared.get(i, j) - row_mean[i] - row_mean[j] + grand));

    let eig = SymmetricEigen::new(b.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&c)));
    let top = eig.eigenvalues[order[0]];
    let threshold = POSITIVE_EIGENVALUE_TOLERANCE * top;
    let kept: Vec<usize> =
        order.iter().copied().take(p).filter(|&c| top > 0.0 && eig.eigenvalues[c] > threshold).collect();

    let norm = b.norm();
    let mut eigenvalues = Vec::with_capacity(kept.len());
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(kept.len());
    for (index, &c) in kept.iter().enumerate() {
        let mu = eig.eigenvalues[c];
        let mut v: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
        let residual = (&b * DMatrix::from_column_slice(n, 1, &v) - DMatrix::from_column_slice(n, 1, &v) * mu).norm();
        if residual > EIGEN_RESIDUAL_TOLERANCE * norm.max(f64::MIN_POSITIVE) {
            return Err(IsomapError::EigenResidual { index, residual });
        }
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let scale = mu.sqrt();
        columns.push(v.into_iter().map(|x| x * scale).collect());
        eigenvalues.push(mu);
    }
    let truncated = columns.len() < p;
    if columns.is_empty() {
        columns.push(vec![0.0; n]);
        eigenvalues.push(0.0);
    }
    let dim = columns.len();
    let mut coords = Vec::with_capacity(n * dim);
    for i in 0..n {
        for col in &columns {
            coords.push(col[i]);
        }
    }
    Ok(Embedding { coords, n, dim, eigenvalues, truncated })
}

/// Full Isomap: neighbor graph, geodesics, classical MDS.
pub fn isomap(d: &DistanceMatrix, lambda: usize, p: usize) -> Result<Embedding, IsomapError> {
    isomap_with_geodesics(d, lambda, p).map(|(e, _)| e)
}

/// As [`isomap`], also returning the geodesic matrix.
pub fn isomap_with_geodesics(
    d: &DistanceMatrix,
    lambda: usize,
    p: usize,
) -> Result<(Embedding, GeodesicMatrix), IsomapError> {
    let n = d.dim();
    if n < MIN_PIPELINE_NODES {
        return Err(IsomapError::TooSmall { n });
    }
    let ng = build_neighbor_graph(d, lambda)?;
    let gd = geodesic_distances(&ng)?;
    let e = classical_mds(&gd, p)?;
    Ok((e, gd))
}

/// `1 - r²` between geodesic and embedded pairwise distances.
pub fn residual_variance(gd: &GeodesicMatrix, e: &Embedding) -> f64 {
    let n = e.len();
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let x = gd.values.get(i, j);
            let y = e.distance(i, j);
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
            m += 1.0;
        }
    }
    let cov = sxy / m - (sx / m) * (sy / m);
    let vx = sxx / m - (sx / m).powi(2);
    let vy = syy / m - (sy / m).powi(2);
    if vx <= 0.0 || vy <= 0.0 {
        return 1.0;
    }
    1.0 - cov * cov / (vx * vy)
}
