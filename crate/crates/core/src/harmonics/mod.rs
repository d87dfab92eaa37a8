//! Manifold harmonic analysis on a truncated eigenbasis.
//!
//! Analysis is `c = Zᵀ B f`, synthesis is `f' = Z c`. Spectral filters act
//! diagonally on the coefficients; the propagation filter is
//!
//! ```text
//! F(λ) = exp(−(λ − μ)² / σ²) · exp(−λ t)
//! ```
//!
//! with one `(μ, σ, t)` per channel. The Gaussian factor is deliberately not
//! normalized to `F(0) = 1`, so only the pure heat mode conserves the mean.

mod field;
mod filter;
mod hks;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::{Point, TriangleMesh};
use crate::spectral::SpectralBasis;

pub use field::{read_field, read_field_csv, write_field, write_field_csv, SurfaceField, FIELD_MAGIC};
pub use filter::{
    apply_filter, filter_gradients, fit_filter, heat_diffuse, FilterGradients, FilterParams, FitOptions, FitResult,
};
pub use hks::{default_hks_times, heat_kernel_signature};

/// Spectral coefficients of a field: a `k × n` matrix, one column per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs {
    pub coeffs: DMatrix<f64>,
    pub names: Vec<String>,
    /// [`SpectralBasis::identity`] of the producing basis, empty if unknown.
    pub basis_id: String,
}

impl SpectralCoeffs {
    pub fn new(coeffs: DMatrix<f64>) -> Self {
        let names = (0..coeffs.ncols()).map(|i| format!("c{i}")).collect();
        Self {
            coeffs,
            names,
            basis_id: String::new(),
        }
    }
}

fn check_field(field: &SurfaceField, basis: &SpectralBasis) -> Result<()> {
    if field.vertex_count() != basis.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "field has {} rows, basis has {} vertices",
            field.vertex_count(),
            basis.vertex_count()
        )));
    }
    if let Some(h) = &field.mesh_hash {
        if !basis.mesh_hash.is_empty() && *h != basis.mesh_hash {
            return Err(Error::HashMismatch {
                field: h.clone(),
                basis: basis.mesh_hash.clone(),
            });
        }
    }
    Ok(())
}

/// `Zᵀ B f` per channel.
pub fn to_spectral(field: &SurfaceField, basis: &SpectralBasis) -> Result<SpectralCoeffs> {
    check_field(field, basis)?;
    let bf = basis.mass.mul_dense(&field.values);
    Ok(SpectralCoeffs {
        coeffs: basis.vectors.tr_mul(&bf),
        names: field.names.clone(),
        basis_id: basis.identity(),
    })
}

/// `Z c` per channel.
pub fn from_spectral(coeffs: &SpectralCoeffs, basis: &SpectralBasis) -> Result<SurfaceField> {
    if coeffs.coeffs.nrows() != basis.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficient rows for a basis of size {}",
            coeffs.coeffs.nrows(),
            basis.len()
        )));
    }
    if !coeffs.basis_id.is_empty() && coeffs.basis_id != basis.identity() {
        return Err(Error::HashMismatch {
            field: coeffs.basis_id.clone(),
            basis: basis.identity(),
        });
    }
    let mut out = SurfaceField::new(&basis.vectors * &coeffs.coeffs, coeffs.names.clone())?;
    if !basis.mesh_hash.is_empty() {
        out.mesh_hash = Some(basis.mesh_hash.clone());
    }
    Ok(out)
}

/// Orthogonal projection onto the span of the basis.
pub fn project(field: &SurfaceField, basis: &SpectralBasis) -> Result<SurfaceField> {
    from_spectral(&to_spectral(field, basis)?, basis)
}

/// Coordinates reconstructed from the first `k_keep` eigenvectors; faces unchanged.
pub fn smooth_coordinates(mesh: &TriangleMesh, basis: &SpectralBasis, k_keep: usize) -> Result<TriangleMesh> {
    if k_keep == 0 || k_keep > basis.len() {
        return Err(Error::InvalidParameter(format!(
            "k_keep must be in 1..={}, got {k_keep}",
            basis.len()
        )));
    }
    let coords = SurfaceField::from_points(mesh.vertices(), mesh);
    let truncated = basis.truncated(k_keep)?;
    let smooth = project(&coords, &truncated)?;
    let v = &smooth.values;
    let points = (0..v.nrows())
        .map(|i| Point::new(v[(i, 0)], v[(i, 1)], v[(i, 2)]))
        .collect();
    mesh.with_vertices(points)
}
