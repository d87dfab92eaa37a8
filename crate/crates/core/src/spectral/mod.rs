//! Laplace-Beltrami discretization and its generalized eigenproblem.
//!
//! [`assemble_stiffness`] returns the positive semi-definite cotangent
//! Laplacian `L` (off-diagonal `−½(cot α + cot β)`, diagonal the negated
//! off-diagonal row sum), so `xᵀLx` is the Dirichlet energy and `L·1 = 0`.
//! [`assemble_mass`] is the linear-FEM consistent mass matrix `B`.
//! [`solve_spectrum`] computes the lowest pairs of `L z = λ B z` with
//! `ZᵀBZ = I`.

mod container;
mod lanczos;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::sparse::SparseSymMatrix;

pub use container::{read_basis, read_provenance, write_basis, BasisProvenance, BASIS_MAGIC};

/// Default eigenvalue cap for protein-scale surfaces, in Å⁻².
pub const DEFAULT_LAMBDA_MAX: f64 = 0.3;

/// How many eigenpairs to compute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumRequest {
    /// The `k` smallest eigenpairs.
    Count(usize),
    /// Every eigenpair with `λ ≤ lambda_max`.
    MaxEigenvalue(f64),
}

impl Default for SpectrumRequest {
    fn default() -> Self {
        Self::MaxEigenvalue(DEFAULT_LAMBDA_MAX)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative eigen-residual `‖Lz − λBz‖ / (‖Bz‖·max(1, λ))` required for convergence.
    pub tolerance: f64,
    /// Krylov dimension cap as a multiple of the requested count.
    pub krylov_factor: usize,
    pub block_size: usize,
    pub seed: u64,
    /// Shift is `shift_scale · trace(L) / N`.
    pub shift_scale: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            krylov_factor: 10,
            block_size: 8,
            seed: 0x5eed,
            shift_scale: 1e-8,
        }
    }
}

/// Truncated eigenbasis of a surface: ascending eigenvalues and B-orthonormal
/// eigenvectors as the columns of an `N × k` matrix.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub eigenvalues: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub mass: Arc<SparseSymMatrix>,
    /// Content hash of the mesh the basis was computed on.
    pub mesh_hash: String,
    pub request: SpectrumRequest,
    /// Relative residual of each pair, empty when loaded without provenance.
    pub residuals: Vec<f64>,
    pub shift: f64,
    pub krylov_dim: usize,
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.vectors.nrows()
    }

    /// Identity used to tie coefficients to the basis they came from.
    pub fn identity(&self) -> String {
        format!("{}:{}", self.mesh_hash, self.len())
    }

    /// First `k` pairs.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k > self.len() {
            return Err(Error::InvalidParameter(format!(
                "cannot keep {k} of {} eigenpairs",
                self.len()
            )));
        }
        Ok(Self {
            eigenvalues: self.eigenvalues[..k].to_vec(),
            vectors: self.vectors.columns(0, k).into_owned(),
            residuals: self.residuals.iter().take(k).copied().collect(),
            request: SpectrumRequest::Count(k),
            ..self.clone()
        })
    }
}

fn cot_at(corner: &crate::mesh::Point, a: &crate::mesh::Point, b: &crate::mesh::Point) -> f64 {
    let u = a - corner;
    let v = b - corner;
    u.dot(&v) / u.cross(&v).norm()
}

/// Cotangent stiffness matrix in positive semi-definite form.
pub fn assemble_stiffness(mesh: &TriangleMesh) -> Result<SparseSymMatrix> {
    let n = mesh.vertex_count();
    let mut off = Vec::with_capacity(mesh.face_count() * 3);
    for (fi, f) in mesh.faces().iter().enumerate() {
        let p = mesh.corners(fi);
        for c in 0..3 {
            let (a, b) = ((c + 1) % 3, (c + 2) % 3);
            let cot = cot_at(&p[c], &p[a], &p[b]);
            if !cot.is_finite() {
                return Err(Error::NonFiniteCotangent { face: fi });
            }
            off.push((f[a], f[b], -0.5 * cot));
        }
    }
    let mut trip = off;
    trip.extend((0..n).map(|i| (i, i, 0.0)));
    let mut l = SparseSymMatrix::from_sym_triplets(n, &trip);
    l.set_diagonal_to_negated_offdiagonal_sum();
    Ok(l)
}

/// Linear-FEM mass matrix: `|t|/6` per incident triangle on the diagonal,
/// `(|t₁| + |t₂|)/12` on each edge.
pub fn assemble_mass(mesh: &TriangleMesh) -> SparseSymMatrix {
    let areas = &mesh.topology().face_areas;
    let mut trip = Vec::with_capacity(mesh.face_count() * 6);
    for (f, &area) in mesh.faces().iter().zip(areas) {
        for c in 0..3 {
            trip.push((f[c], f[c], area / 6.0));
            trip.push((f[c], f[(c + 1) % 3], area / 12.0));
        }
    }
    SparseSymMatrix::from_sym_triplets(mesh.vertex_count(), &trip)
}

/// Lowest eigenpairs of `L z = λ B z`.
pub fn solve_spectrum(
    stiffness: &SparseSymMatrix,
    mass: Arc<SparseSymMatrix>,
    request: SpectrumRequest,
    options: &SolverOptions,
) -> Result<SpectralBasis> {
    let n = stiffness.dim();
    if mass.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "stiffness {n} vs mass {}",
            mass.dim()
        )));
    }
    if n == 0 {
        return Err(Error::EmptyMesh);
    }
    let out = match request {
        SpectrumRequest::Count(k) => {
            if k == 0 || k > n {
                return Err(Error::InvalidParameter(format!(
                    "requested {k} eigenpairs of a {n}-vertex mesh"
                )));
            }
            lanczos::smallest_eigenpairs(stiffness, &mass, k, options)?
        }
        SpectrumRequest::MaxEigenvalue(lmax) => {
            if !(lmax > 0.0 && lmax.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "lambda_max must be positive, got {lmax}"
                )));
            }
            let mut k = n.min(32);
            loop {
                let out = lanczos::smallest_eigenpairs(stiffness, &mass, k, options)?;
                if *out.values.last().expect("k >= 1") > lmax || k == n {
                    let keep = out.values.iter().take_while(|&&l| l <= lmax).count().max(1);
                    break out.truncate(keep);
                }
                k = (2 * k).min(n);
            }
        }
    };
    Ok(SpectralBasis {
        eigenvalues: out.values,
        vectors: out.vectors,
        mass,
        mesh_hash: String::new(),
        request,
        residuals: out.residuals,
        shift: out.shift,
        krylov_dim: out.krylov_dim,
    })
}

/// Assembles both matrices for `mesh` and solves, tagging the basis with the mesh hash.
pub fn compute_basis(mesh: &TriangleMesh, request: SpectrumRequest, options: &SolverOptions) -> Result<SpectralBasis> {
    let l = assemble_stiffness(mesh)?;
    let b = Arc::new(assemble_mass(mesh));
    let mut basis = solve_spectrum(&l, b, request, options)?;
    basis.mesh_hash = mesh.content_hash();
    Ok(basis)
}

/// Least-squares eigenvalue growth rate against the area-based asymptote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylFit {
    pub slope: f64,
    /// `4π / area`
    pub predicted: f64,
    pub ratio: f64,
}

/// Fits `λ_i ≈ a + slope·i` over `i ∈ [k/4, k)`.
pub fn weyl_slope(basis: &SpectralBasis, area: f64) -> Result<WeylFit> {
    weyl_slope_of(&basis.eigenvalues, area)
}

pub fn weyl_slope_of(eigenvalues: &[f64], area: f64) -> Result<WeylFit> {
    let k = eigenvalues.len();
    if k < 30 {
        return Err(Error::InvalidParameter(format!(
            "Weyl fit needs at least 30 eigenvalues, got {k}"
        )));
    }
    if !(area > 0.0) {
        return Err(Error::InvalidParameter("area must be positive".into()));
    }
    let idx: Vec<f64> = (k / 4..k).map(|i| i as f64).collect();
    let vals = &eigenvalues[k / 4..];
    let m = idx.len() as f64;
    let mx = idx.iter().sum::<f64>() / m;
    let my = vals.iter().sum::<f64>() / m;
    let sxy: f64 = idx.iter().zip(vals).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = idx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let predicted = 4.0 * PI / area;
    Ok(WeylFit {
        slope,
        predicted,
        ratio: slope / predicted,
    })
}
