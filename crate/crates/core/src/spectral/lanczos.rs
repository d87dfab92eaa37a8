//! Block shift-invert Lanczos in the B-inner product with full reorthogonalization.
//!
//! The operator is `OP = (L + εB)⁻¹ B`, whose dominant eigenvalues
//! `θ = 1/(λ + ε)` belong to the smallest `λ`. For a connected surface the
//! null space of `L` is exactly the constants, so the B-normalized constant
//! vector is locked as the first eigenvector and every Krylov vector is kept
//! B-orthogonal to it. This keeps the huge `θ₀ = 1/ε` out of the projected
//! matrix. Blocks (rather than single vectors) capture exactly repeated
//! eigenvalues such as the multiplets of symmetric meshes.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sparse::{ProfileCholesky, SparseSymMatrix};

use super::SolverOptions;

/// Floor on the Krylov dimension cap so that small requests can still reach
/// the residual tolerance.
const MIN_KRYLOV_CAP: usize = 200;

pub(crate) struct EigenOutput {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub shift: f64,
    pub krylov_dim: usize,
}

impl EigenOutput {
    pub fn truncate(self, k: usize) -> Self {
        Self {
            values: self.values[..k].to_vec(),
            vectors: self.vectors.columns(0, k).into_owned(),
            residuals: self.residuals[..k].to_vec(),
            ..self
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// B-orthonormal Krylov basis with the cached products `B q` and `OP q`.
struct Basis<'a> {
    mass: &'a SparseSymMatrix,
    q: Vec<Vec<f64>>,
    bq: Vec<Vec<f64>>,
    op_q: Vec<Vec<f64>>,
}

impl<'a> Basis<'a> {
    fn b_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.mass.mul_slice(x, &mut y);
        y
    }

    /// Orthogonalizes `v` against the basis twice and appends it if enough of
    /// it survives. Returns whether it was kept.
    fn push_orthonormal(&mut self, mut v: Vec<f64>) -> bool {
        let norm0 = dot(&v, &self.b_mul(&v)).max(0.0).sqrt();
        if !(norm0 > 0.0) || !norm0.is_finite() {
            return false;
        }
        for _ in 0..2 {
            let coeffs: Vec<f64> = self.bq.par_iter().map(|bq| dot(bq, &v)).collect();
            for (c, q) in coeffs.iter().zip(&self.q) {
                axpy(-c, q, &mut v);
            }
        }
        let bv = self.b_mul(&v);
        let norm = dot(&v, &bv).max(0.0).sqrt();
        if norm <= 1e-10 * norm0 {
            return false;
        }
        let inv = 1.0 / norm;
        v.iter_mut().for_each(|x| *x *= inv);
        self.bq.push(bv.into_iter().map(|x| x * inv).collect());
        self.q.push(v);
        true
    }
}

pub(crate) fn smallest_eigenpairs(
    stiffness: &SparseSymMatrix,
    mass: &SparseSymMatrix,
    k: usize,
    opts: &SolverOptions,
) -> Result<EigenOutput> {
    let n = stiffness.dim();
    if stiffness.component_count() != 1 {
        return Err(Error::Factorization(format!(
            "surface has {} disconnected components",
            stiffness.component_count()
        )));
    }
    let shift = opts.shift_scale * stiffness.trace() / n as f64;
    let shifted = stiffness.add_scaled(shift, mass)?;
    let chol = ProfileCholesky::factor(&shifted)?;
    let op = |x: &[f64]| -> Vec<f64> {
        let mut bx = vec![0.0; n];
        mass.mul_slice(x, &mut bx);
        chol.solve(&bx)
    };

    let mut basis = Basis {
        mass,
        q: Vec::new(),
        bq: Vec::new(),
        op_q: Vec::new(),
    };
    basis.push_orthonormal(vec![1.0; n]);
    let constant = basis.q[0].clone();
    // locked constant mode is not part of the projected problem
    basis.op_q.push(Vec::new());
    let want = k - 1;
    let cap = n.min((opts.krylov_factor * k).max(MIN_KRYLOV_CAP));
    let block = opts.block_size.max(1).min(n - 1).max(if n > 1 { 1 } else { 0 });

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random_vec = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };

    let mut projected = DMatrix::<f64>::zeros(0, 0);
    let mut pending: Vec<usize> = Vec::new();
    let mut ritz: Option<(Vec<f64>, DMatrix<f64>, Vec<f64>)> = None;

    if want > 0 {
        let mut tries = 0;
        while pending.len() < block && basis.q.len() < n && tries < 10 * block {
            tries += 1;
            if basis.push_orthonormal(random_vec(&mut rng)) {
                pending.push(basis.q.len() - 1);
            }
        }
    }

    while want > 0 && !pending.is_empty() {
        // apply the operator to the newest block
        let products: Vec<Vec<f64>> = pending.par_iter().map(|&j| op(&basis.q[j])).collect();
        basis.op_q.extend(products);
        let m = basis.q.len() - 1;
        let old = projected.nrows();
        projected = projected.resize(m, m, 0.0);
        for j in old..m {
            for i in 0..=j {
                let a = dot(&basis.bq[i + 1], &basis.op_q[j + 1]);
                let b = dot(&basis.bq[j + 1], &basis.op_q[i + 1]);
                let t = 0.5 * (a + b);
                projected[(i, j)] = t;
                projected[(j, i)] = t;
            }
        }

        if m >= want {
            let (values, vectors, residuals) = rayleigh_ritz(&projected, &basis, stiffness, want);
            let converged = values
                .iter()
                .zip(&residuals)
                // residuals are already relative to max(1, |λ|)
                .filter(|(_, r)| **r <= opts.tolerance)
                .count();
            let done = converged == want || basis.q.len() == n;
            ritz = Some((values, vectors, residuals));
            if done {
                break;
            }
            if basis.q.len() >= cap {
                return Err(Error::NonConvergence {
                    converged: converged + 1,
                    requested: k,
                    dimension: basis.q.len(),
                });
            }
        }

        // next block: OP of the previous block, then random refills after deflation
        let seeds: Vec<Vec<f64>> = pending.iter().map(|&j| basis.op_q[j].clone()).collect();
        pending.clear();
        for s in seeds {
            if basis.q.len() >= n {
                break;
            }
            if basis.push_orthonormal(s) {
                pending.push(basis.q.len() - 1);
            }
        }
        let mut tries = 0;
        while pending.len() < block && basis.q.len() < n && tries < 10 * block {
            tries += 1;
            if basis.push_orthonormal(random_vec(&mut rng)) {
                pending.push(basis.q.len() - 1);
            }
        }
        if pending.is_empty() {
            break;
        }
    }

    let mut values = vec![stiffness.bilinear(&constant, &constant)];
    let mut columns = vec![constant.clone()];
    let mut residuals = vec![residual(stiffness, mass, &constant, values[0])];
    if let Some((v, z, r)) = ritz {
        values.extend(v);
        residuals.extend(r);
        columns.extend(z.column_iter().map(|c| c.iter().copied().collect::<Vec<f64>>()));
    }
    if values.len() < k {
        return Err(Error::NonConvergence {
            converged: values.len(),
            requested: k,
            dimension: basis.q.len(),
        });
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut vectors = DMatrix::zeros(n, k);
    for (c, &src) in order.iter().take(k).enumerate() {
        let mut col = columns[src].clone();
        fix_sign(&mut col);
        vectors.column_mut(c).copy_from_slice(&col);
    }
    Ok(EigenOutput {
        values: order.iter().take(k).map(|&i| values[i]).collect(),
        residuals: order.iter().take(k).map(|&i| residuals[i]).collect(),
        vectors,
        shift,
        krylov_dim: basis.q.len(),
    })
}

/// Ritz pairs for the `want` largest projected eigenvalues, with eigenvalues
/// recomputed as Rayleigh quotients of `L` and their relative residuals.
fn rayleigh_ritz(
    projected: &DMatrix<f64>,
    basis: &Basis<'_>,
    stiffness: &SparseSymMatrix,
    want: usize,
) -> (Vec<f64>, DMatrix<f64>, Vec<f64>) {
    let m = projected.nrows();
    let n = stiffness.dim();
    let eig = SymmetricEigen::new(projected.clone());
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    idx.truncate(want);
    let cols: Vec<(f64, Vec<f64>, f64)> = idx
        .par_iter()
        .map(|&c| {
            let s = eig.eigenvectors.column(c);
            let mut y = vec![0.0; n];
            for (i, si) in s.iter().enumerate() {
                axpy(*si, &basis.q[i + 1], &mut y);
            }
            let mut by = vec![0.0; n];
            basis.mass.mul_slice(&y, &mut by);
            let norm = dot(&y, &by).sqrt();
            y.iter_mut().for_each(|x| *x /= norm);
            let lambda = stiffness.bilinear(&y, &y);
            let r = residual(stiffness, basis.mass, &y, lambda);
            (lambda, y, r)
        })
        .collect();
    let mut z = DMatrix::zeros(n, want);
    let mut values = Vec::with_capacity(want);
    let mut residuals = Vec::with_capacity(want);
    for (c, (l, y, r)) in cols.into_iter().enumerate() {
        z.column_mut(c).copy_from_slice(&y);
        values.push(l);
        residuals.push(r);
    }
    (values, z, residuals)
}

/// `‖L z − λ B z‖ / (‖B z‖ · max(1, |λ|))`.
pub(crate) fn residual(stiffness: &SparseSymMatrix, mass: &SparseSymMatrix, z: &[f64], lambda: f64) -> f64 {
    let n = z.len();
    let mut lz = vec![0.0; n];
    let mut bz = vec![0.0; n];
    stiffness.mul_slice(z, &mut lz);
    mass.mul_slice(z, &mut bz);
    let r: f64 = lz
        .iter()
        .zip(&bz)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt();
    r / (dot(&bz, &bz).sqrt() * lambda.abs().max(1.0))
}

/// Makes the first entry of largest magnitude positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
