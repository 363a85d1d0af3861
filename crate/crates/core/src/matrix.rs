//! Dense row-major square matrix used for all pairwise quantities.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn filled(n: usize, value: f64) -> Self {
        Self { n, data: vec![value; n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds a matrix from `n` rows of length `n`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n, "row length must equal row count");
            data.extend(row);
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Values strictly above the diagonal, row by row.
    pub fn upper_triangle(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| self.get(i, j)))
    }

    /// CSV with a header of labels; infinite entries are written as `inf`.
    pub fn to_csv(&self, labels: &[String]) -> String {
        let mut out = String::from("node");
        for l in labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for i in 0..self.n {
            out.push_str(&labels[i]);
            for &v in self.row(i) {
                if v.is_infinite() {
                    out.push_str(",inf");
                } else {
                    let _ = write!(out, ",{v}");
                }
            }
            out.push('\n');
        }
        out
    }
}
