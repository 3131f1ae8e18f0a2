//! Compressed sparse row storage for element-assembled symmetric operators.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Topology;

/// Nonzero structure shared by every matrix assembled on one topology.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparsityPattern {
    /// All node pairs that share an element; column indices sorted per row.
    pub fn from_topology(topology: &Topology) -> Self {
        let n = topology.num_nodes();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for el in topology.elements() {
            for &i in el {
                rows[i].extend_from_slice(el);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend(row);
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Position of entry `(i, j)` in the value array.
    pub fn offset(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    pub fn row(&self, i: usize) -> (&[usize], std::ops::Range<usize>) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], range)
    }
}

/// Symmetric sparse matrix (both triangles stored).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpd {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl SparseSpd {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    pub fn identity(pattern: Arc<SparsityPattern>) -> Self {
        let mut m = Self::zeros(pattern);
        for i in 0..m.dim() {
            let k = m.pattern.offset(i, i).expect("pattern contains the diagonal");
            m.values[k] = 1.0;
        }
        m
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.offset(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.dim()) {
            let (cols, range) = self.pattern.row(i);
            *yi = cols
                .iter()
                .zip(&self.values[range])
                .map(|(&j, &a)| a * x[j])
                .sum();
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.mul_vec(x, &mut y);
        y
    }

    /// `x^T A x`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `a * self + b * other`; both must share a pattern.
    pub fn linear_combination(&self, a: f64, other: &SparseSpd, b: f64) -> Result<SparseSpd> {
        if !Arc::ptr_eq(&self.pattern, &other.pattern) && self.pattern != other.pattern {
            return Err(Error::DimensionMismatch {
                expected: self.pattern.nnz(),
                got: other.pattern.nnz(),
            });
        }
        Ok(SparseSpd {
            pattern: self.pattern.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn scaled(&self, s: f64) -> SparseSpd {
        SparseSpd {
            pattern: self.pattern.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// Max row sum of absolute values.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.values[self.pattern.row(i).1].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max |A_ij - A_ji|`
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim() {
            let (cols, range) = self.pattern.row(i);
            for (&j, &a) in cols.iter().zip(&self.values[range]) {
                worst = worst.max((a - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut d = vec![vec![0.0; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, range) = self.pattern.row(i);
            for (&j, &a) in cols.iter().zip(&self.values[range]) {
                row[j] = a;
            }
        }
        d
    }
}
