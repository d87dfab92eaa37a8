use std::collections::VecDeque;

use crate::error::{Error, Result};

use super::SparseSymMatrix;

/// Cholesky factor `P A Pᵀ = L Lᵀ` in variable-band (profile) storage under a
/// reverse Cuthill-McKee ordering. Fill stays inside the envelope, which is
/// small for surface meshes.
#[derive(Debug, Clone)]
pub struct ProfileCholesky {
    n: usize,
    /// new index → original index
    perm: Vec<usize>,
    /// first stored column of each (permuted) row
    first: Vec<usize>,
    /// start of each row in `data`; row i spans columns first[i]..=i
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl ProfileCholesky {
    pub fn factor(a: &SparseSymMatrix) -> Result<Self> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for &j in a.row_cols(old) {
                first[new] = first[new].min(inv[j]);
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + (i - first[i] + 1));
        }
        let mut data = vec![0.0; offset[n]];
        for (new, &old) in perm.iter().enumerate() {
            for (&j, &v) in a.row_cols(old).iter().zip(a.row_vals(old)) {
                let c = inv[j];
                if c <= new {
                    data[offset[new] + c - first[new]] = v;
                }
            }
        }
        for i in 0..n {
            let (done, rest) = data.split_at_mut(offset[i]);
            let row_i = &mut rest[..i - first[i] + 1];
            for j in first[i]..i {
                let row_j = &done[offset[j]..offset[j] + (j - first[j] + 1)];
                let k0 = first[i].max(first[j]);
                let mut s = row_i[j - first[i]];
                for k in k0..j {
                    s -= row_i[k - first[i]] * row_j[k - first[j]];
                }
                row_i[j - first[i]] = s / row_j[j - first[j]];
            }
            let diag = row_i[i - first[i]];
            let d = diag - row_i[..i - first[i]].iter().map(|x| x * x).sum::<f64>();
            // a pivot lost to cancellation means the matrix is singular to working precision
            if !(d > 1e-14 * diag.abs()) || !d.is_finite() {
                return Err(Error::Factorization(format!(
                    "matrix not positive definite (pivot {d:e} at original row {})",
                    perm[i]
                )));
            }
            row_i[i - first[i]] = d.sqrt();
        }
        Ok(Self {
            n,
            perm,
            first,
            offset,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[self.offset[i]..self.offset[i + 1]]
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..self.n {
            let row = self.row(i);
            let f = self.first[i];
            let s: f64 = row[..i - f].iter().zip(&y[f..i]).map(|(l, y)| l * y).sum();
            y[i] = (y[i] - s) / row[i - f];
        }
        for i in (0..self.n).rev() {
            let row = self.row(i);
            let f = self.first[i];
            y[i] /= row[i - f];
            let xi = y[i];
            for (yk, l) in y[f..i].iter_mut().zip(&row[..i - f]) {
                *yk -= l * xi;
            }
        }
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Reverse Cuthill-McKee ordering of the sparsity graph, `result[new] = old`.
/// Each component starts from a pseudo-peripheral vertex; ties break by index.
pub fn reverse_cuthill_mckee(a: &SparseSymMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.neighbors(i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(a, seed, &degree);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = a.neighbors(v).filter(|&w| !visited[w]).collect();
            nb.sort_unstable_by_key(|&w| (degree[w], w));
            for w in nb {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(a: &SparseSymMatrix, start: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; a.dim()];
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        let l = level[v].expect("visited");
        for w in a.neighbors(v) {
            if level[w].is_none() {
                level[w] = Some(l + 1);
                queue.push_back(w);
            }
        }
    }
    level
}

fn pseudo_peripheral(a: &SparseSymMatrix, seed: usize, degree: &[usize]) -> usize {
    let mut current = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let levels = bfs_levels(a, current);
        let depth = levels.iter().flatten().copied().max().unwrap_or(0);
        let far = (0..a.dim())
            .filter(|&v| levels[v] == Some(depth))
            .min_by_key(|&v| (degree[v], v))
            .unwrap_or(current);
        if depth <= ecc {
            break;
        }
        ecc = depth;
        current = far;
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid_laplacian(w: usize, h: usize, shift: f64) -> SparseSymMatrix {
        let id = |x: usize, y: usize| y * w + x;
        let mut t = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let mut deg = 0.0;
                if x + 1 < w {
                    t.push((id(x, y), id(x + 1, y), -1.0));
                    deg += 1.0;
                }
                if y + 1 < h {
                    t.push((id(x, y), id(x, y + 1), -1.0));
                    deg += 1.0;
                }
                if x > 0 {
                    deg += 1.0;
                }
                if y > 0 {
                    deg += 1.0;
                }
                t.push((id(x, y), id(x, y), deg + shift));
            }
        }
        SparseSymMatrix::from_sym_triplets(w * h, &t)
    }

    #[test]
    fn solves_against_dense_reference() {
        let a = grid_laplacian(9, 7, 0.1);
        let chol = ProfileCholesky::factor(&a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b: Vec<f64> = (0..a.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = chol.solve(&b);
        let dense = a.to_dense().cholesky().unwrap().solve(&DVector::from_vec(b.clone()));
        for (u, v) in x.iter().zip(dense.iter()) {
            assert!((u - v).abs() < 1e-10);
        }
        assert!(chol.envelope_size() < a.dim() * a.dim() / 4);
    }

    #[test]
    fn singular_matrix_fails() {
        let a = grid_laplacian(4, 4, 0.0);
        assert!(matches!(ProfileCholesky::factor(&a), Err(Error::Factorization(_))));
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = grid_laplacian(5, 3, 1.0);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, (0..15).collect::<Vec<_>>());
    }
}
