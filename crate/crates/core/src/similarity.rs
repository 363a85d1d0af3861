//! Node-pair similarity and the similarity-to-distance transform.
//!
//! The default measure is structure similarity over closed neighborhoods,
//! `|N[v] ∩ N[w]| / sqrt(|N[v]| |N[w]|)` where `N[v]` contains `v` itself.
//! Alternates compare open adjacency rows.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::matrix::SquareMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("node index {index} out of range for {node_count} nodes")]
    IndexOutOfRange { index: usize, node_count: usize },
    #[error("unknown similarity measure `{0}`")]
    UnknownMeasure(String),
    #[error("similarity ({i}, {j}) = {value} is negative or NaN")]
    NegativeSimilarity { i: usize, j: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    #[default]
    Structure,
    Euclidean,
    Jaccard,
    Cosine,
    Hamming,
}

impl Measure {
    pub const ALL: [Measure; 5] =
        [Measure::Structure, Measure::Euclidean, Measure::Jaccard, Measure::Cosine, Measure::Hamming];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Structure => "structure",
            Measure::Euclidean => "euclidean",
            Measure::Jaccard => "jaccard",
            Measure::Cosine => "cosine",
            Measure::Hamming => "hamming",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = SimilarityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| SimilarityError::UnknownMeasure(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub values: SquareMatrix,
    pub measure: Measure,
}

/// Pairwise distances; `f64::INFINITY` marks pairs with no finite distance.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub values: SquareMatrix,
}

impl DistanceMatrix {
    pub fn new(values: SquareMatrix) -> Self {
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }
}

/// Size of the intersection of two sorted slices.
fn sorted_intersection(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// `c / sqrt(a b)` evaluated as `sqrt(c² / (a b))`, so equal ratios give
/// bit-identical results regardless of the integers they come from.
fn overlap_ratio(c: usize, a: usize, b: usize) -> f64 {
    let c = c as f64;
    (c * c / (a as f64 * b as f64)).sqrt()
}

pub fn structure_similarity(g: &Graph, v: usize, w: usize) -> Result<f64, SimilarityError> {
    let n = g.node_count();
    for index in [v, w] {
        if index >= n {
            return Err(SimilarityError::IndexOutOfRange { index, node_count: n });
        }
    }
    if v == w {
        return Ok(1.0);
    }
    // Closed neighborhoods: each node is in its own set, so v and w contribute
    // to the intersection exactly when they are adjacent.
    let mut common = sorted_intersection(g.neighbors(v), g.neighbors(w));
    if g.has_edge(v, w) {
        common += 2;
    }
    Ok(overlap_ratio(common, g.degree(v) + 1, g.degree(w) + 1))
}

/// Structure-similarity row for `v`, counting closed-neighborhood overlaps by
/// walking two hops.
fn structure_row(g: &Graph, v: usize) -> Vec<f64> {
    let n = g.node_count();
    let mut counts = vec![0u32; n];
    let closed = |x: usize| std::iter::once(x).chain(g.neighbors(x).iter().copied());
    for w in closed(v) {
        for x in closed(w) {
            counts[x] += 1;
        }
    }
    let size_v = g.degree(v) + 1;
    counts
        .into_iter()
        .enumerate()
        .map(|(x, c)| {
            if x == v {
                1.0
            } else {
                overlap_ratio(c as usize, size_v, g.degree(x) + 1)
            }
        })
        .collect()
}

fn adjacency_row_similarity(g: &Graph, measure: Measure, v: usize, w: usize) -> f64 {
    if v == w {
        return 1.0;
    }
    let a = g.neighbors(v);
    let b = g.neighbors(w);
    let common = sorted_intersection(a, b) as f64;
    let union = (a.len() + b.len()) as f64 - common;
    let differing = union - common;
    match measure {
        Measure::Structure => unreachable!("structure similarity is computed row-wise"),
        Measure::Jaccard => {
            if union == 0.0 {
                0.0
            } else {
                common / union
            }
        }
        Measure::Cosine => {
            if a.is_empty() || b.is_empty() {
                0.0
            } else {
                overlap_ratio(common as usize, a.len(), b.len())
            }
        }
        Measure::Euclidean => 1.0 / (1.0 + differing.sqrt()),
        Measure::Hamming => 1.0 / (1.0 + differing / g.node_count() as f64),
    }
}

/// Dense similarity matrix under `measure`. Distance-type measures
/// (Euclidean, Hamming) are returned as `1 / (1 + d)`.
pub fn similarity_matrix(g: &Graph, measure: Measure) -> SimilarityMatrix {
    let n = g.node_count();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|v| match measure {
            Measure::Structure => structure_row(g, v),
            _ => (0..n).map(|w| adjacency_row_similarity(g, measure, v, w)).collect(),
        })
        .collect();
    SimilarityMatrix { values: SquareMatrix::from_rows(rows), measure }
}

/// `d = 1/s` off the diagonal, `0` on it; zero similarity becomes infinite.
pub fn to_distance(s: &SimilarityMatrix) -> Result<DistanceMatrix, SimilarityError> {
    let n = s.values.dim();
    let mut out = SquareMatrix::filled(n, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let value = s.values.get(i, j);
            if value.is_nan() || value < 0.0 {
                return Err(SimilarityError::NegativeSimilarity { i, j, value });
            }
            out.set(i, j, if value == 0.0 { f64::INFINITY } else { 1.0 / value });
        }
    }
    Ok(DistanceMatrix::new(out))
}
