//! Symmetric sparse matrices in compressed-row form and a profile Cholesky solver.

mod cholesky;

pub use cholesky::{reverse_cuthill_mckee, ProfileCholesky};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetric sparse matrix stored with both triangles in CSR layout.
///
/// Column indices are sorted within each row; `(i, j)` and `(j, i)` hold
/// bit-identical values when built with [`SparseSymMatrix::from_sym_triplets`].
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds from upper-or-lower triplets; each off-diagonal `(i, j, v)` is
    /// mirrored to `(j, i, v)` and duplicates are summed in input order.
    pub fn from_sym_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut entries: Vec<(usize, usize, usize, f64)> = Vec::with_capacity(triplets.len() * 2);
        for (k, &(i, j, v)) in triplets.iter().enumerate() {
            assert!(i < n && j < n, "triplet index out of range");
            entries.push((i, j, k, v));
            if i != j {
                entries.push((j, i, k, v));
            }
        }
        // sort by position then by input order so that mirrored sums are identical
        entries.sort_unstable_by_key(|&(i, j, k, _)| (i, j, k));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::new();
        let mut val: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (i, j, _, v) in entries {
            if last == Some((i, j)) {
                *val.last_mut().expect("entry") += v;
            } else {
                col.push(j);
                val.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col, val }
    }

    /// Raw CSR parts; fails unless the pattern and values are symmetric.
    pub fn from_csr(n: usize, row_ptr: Vec<usize>, col: Vec<usize>, val: Vec<f64>) -> Result<Self> {
        if row_ptr.len() != n + 1 || col.len() != val.len() || row_ptr[n] != col.len() {
            return Err(Error::DimensionMismatch("inconsistent CSR arrays".into()));
        }
        if row_ptr.windows(2).any(|w| w[0] > w[1]) || col.iter().any(|&c| c >= n) {
            return Err(Error::DimensionMismatch("invalid CSR structure".into()));
        }
        let m = Self { n, row_ptr, col, val };
        for i in 0..n {
            if m.row_cols(i).windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} columns not strictly increasing"
                )));
            }
            for (&j, &v) in m.row_cols(i).iter().zip(m.row_vals(i)) {
                if m.get(j, i) != v {
                    return Err(Error::InvalidParameter(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col
    }

    pub fn values(&self) -> &[f64] {
        &self.val
    }

    pub fn row_cols(&self, i: usize) -> &[usize] {
        &self.col[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn row_vals(&self, i: usize) -> &[f64] {
        &self.val[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.row_cols(i).binary_search(&j) {
            Ok(k) => self.row_vals(i)[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// Off-diagonal entries summed in column order, then the diagonal added.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.offdiagonal_row_sum(i) + self.get(i, i))
            .collect()
    }

    fn offdiagonal_row_sum(&self, i: usize) -> f64 {
        self.row_cols(i)
            .iter()
            .zip(self.row_vals(i))
            .filter(|(&j, _)| j != i)
            .map(|(_, v)| v)
            .sum()
    }

    /// Sets each stored diagonal entry to minus its row's off-diagonal sum, so
    /// that [`row_sums`](Self::row_sums) is exactly zero. Requires a stored diagonal.
    pub(crate) fn set_diagonal_to_negated_offdiagonal_sum(&mut self) {
        for i in 0..self.n {
            let s = self.offdiagonal_row_sum(i);
            let k = self.row_ptr[i] + self.row_cols(i).binary_search(&i).expect("stored diagonal");
            self.val[k] = -s;
        }
    }

    pub fn total_sum(&self) -> f64 {
        self.val.iter().sum()
    }

    pub fn mul_slice(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self
                .row_cols(i)
                .iter()
                .zip(self.row_vals(i))
                .map(|(&j, &v)| v * x[j])
                .sum();
        }
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        self.mul_slice(x.as_slice(), y.as_mut_slice());
        y
    }

    /// `self · X` for a dense `n × m` matrix.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.n);
        let mut y = DMatrix::zeros(self.n, x.ncols());
        for c in 0..x.ncols() {
            let src = x.column(c);
            let mut dst = y.column_mut(c);
            self.mul_slice(src.as_slice(), dst.as_mut_slice());
        }
        y
    }

    /// `xᵀ · self · y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| {
                x[i] * self
                    .row_cols(i)
                    .iter()
                    .zip(self.row_vals(i))
                    .map(|(&j, &v)| v * y[j])
                    .sum::<f64>()
            })
            .sum()
    }

    /// `self + alpha · other`, over the union of both patterns.
    pub fn add_scaled(&self, alpha: f64, other: &SparseSymMatrix) -> Result<SparseSymMatrix> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!("{} vs {}", self.n, other.n)));
        }
        let mut trip = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            for (&j, &v) in self.row_cols(i).iter().zip(self.row_vals(i)) {
                if j >= i {
                    trip.push((i, j, v));
                }
            }
            for (&j, &v) in other.row_cols(i).iter().zip(other.row_vals(i)) {
                if j >= i {
                    trip.push((i, j, alpha * v));
                }
            }
        }
        Ok(Self::from_sym_triplets(self.n, &trip))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (&j, &v) in self.row_cols(i).iter().zip(self.row_vals(i)) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Vertex adjacency implied by the off-diagonal pattern.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row_cols(i).iter().copied().filter(move |&j| j != i)
    }

    /// Number of connected components of the sparsity graph.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for w in self.neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_mirrored_and_summed() {
        let m = SparseSymMatrix::from_sym_triplets(3, &[(0, 1, 2.0), (1, 0, 0.5), (2, 2, 1.0), (0, 0, 3.0)]);
        assert_eq!(m.get(0, 1), 2.5);
        assert_eq!(m.get(1, 0), 2.5);
        assert_eq!(m.get(2, 2), 1.0);
        assert_eq!(m.get(1, 2), 0.0);
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.component_count(), 2);
        let d = m.to_dense();
        assert_eq!(d, d.transpose());
    }

    #[test]
    fn csr_round_trip() {
        let m = SparseSymMatrix::from_sym_triplets(3, &[(0, 1, 2.0), (1, 1, 4.0), (1, 2, -1.0)]);
        let r =
            SparseSymMatrix::from_csr(3, m.row_ptr().to_vec(), m.col_indices().to_vec(), m.values().to_vec()).unwrap();
        assert_eq!(r, m);
        assert!(SparseSymMatrix::from_csr(2, vec![0, 1, 1], vec![1], vec![1.0]).is_err());
    }
}
