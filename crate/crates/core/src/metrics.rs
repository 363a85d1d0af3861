//! Agreement between two labelings of the same nodes: normalized mutual
//! information and accuracy under the best one-to-one label mapping.

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("labelings differ in length: {truth} vs {pred}")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("labelings are empty")]
    Empty,
}

/// Counts `n_ij` of nodes in true community `i` and predicted community `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<usize>>,
    pub row_sums: Vec<usize>,
    pub col_sums: Vec<usize>,
    pub total: usize,
}

fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let ids = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    (ids, map.len())
}

impl ContingencyTable {
    pub fn new(truth: &[usize], pred: &[usize]) -> Result<Self, MetricsError> {
        if truth.len() != pred.len() {
            return Err(MetricsError::LengthMismatch { truth: truth.len(), pred: pred.len() });
        }
        if truth.is_empty() {
            return Err(MetricsError::Empty);
        }
        let (t, rows) = compact(truth);
        let (p, cols) = compact(pred);
        let mut counts = vec![vec![0; cols]; rows];
        for (&i, &j) in t.iter().zip(&p) {
            counts[i][j] += 1;
        }
        let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums = (0..cols).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(Self { counts, row_sums, col_sums, total: truth.len() })
    }
}

/// Normalized mutual information with natural logarithms. When either side
/// has a single community the score is 1 if both sides are identical set
/// partitions and 0 otherwise.
pub fn nmi(truth: &[usize], pred: &[usize]) -> Result<f64, MetricsError> {
    let table = ContingencyTable::new(truth, pred)?;
    if table.row_sums.len() == 1 || table.col_sums.len() == 1 {
        let same = table.row_sums.len() == table.col_sums.len();
        return Ok(if same { 1.0 } else { 0.0 });
    }
    let n = table.total as f64;
    let mut mutual = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mutual += nij * (nij * n / (table.row_sums[i] as f64 * table.col_sums[j] as f64)).ln();
            }
        }
    }
    let entropy = |sums: &[usize]| -> f64 {
        sums.iter().map(|&s| s as f64).map(|s| s * (s / n).ln()).sum()
    };
    let value = mutual / (entropy(&table.row_sums) * entropy(&table.col_sums)).sqrt();
    Ok(value.clamp(0.0, 1.0))
}

/// Maximum-weight assignment of rows to distinct columns on a rectangular
/// nonnegative matrix (Hungarian method on the zero-padded square matrix).
/// Entry `i` is the column matched to row `i`, or `None` when the row is
/// left unmatched because there are more rows than columns.
pub fn max_weight_matching(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    let size = rows.max(cols);
    if size == 0 {
        return Vec::new();
    }
    let top = weights.iter().flatten().copied().fold(0.0, f64::max);
    let cost = |i: usize, j: usize| -> f64 {
        let w = if i < rows && j < cols { weights[i][j] } else { 0.0 };
        top - w
    };

    // Potentials-based O(size^3) shortest augmenting path; 1-based internals.
    let mut u = vec![0.0; size + 1];
    let mut v = vec![0.0; size + 1];
    let mut way = vec![0usize; size + 1];
    let mut col_owner = vec![0usize; size + 1];
    for i in 1..=size {
        col_owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=size {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=size {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![None; rows];
    for j in 1..=size {
        let i = col_owner[j];
        if i >= 1 && i <= rows && j <= cols {
            assignment[i - 1] = Some(j - 1);
        }
    }
    assignment
}

/// Fraction of nodes whose predicted community maps onto their true one
/// under the best one-to-one mapping of predicted to true labels.
pub fn accuracy(truth: &[usize], pred: &[usize]) -> Result<f64, MetricsError> {
    let table = ContingencyTable::new(truth, pred)?;
    let weights: Vec<Vec<f64>> =
        table.counts.iter().map(|r| r.iter().map(|&c| c as f64).collect()).collect();
    let matched: usize = max_weight_matching(&weights)
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| table.counts[i][j]))
        .sum();
    Ok(matched as f64 / table.total as f64)
}
