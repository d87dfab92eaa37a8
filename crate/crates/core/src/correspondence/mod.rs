//! Functional maps between surfaces, point-to-point recovery, interface
//! extraction, rigid alignment and RMSD metrics.

mod align;
mod dock;
mod interface;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::SpectralCoeffs;
use crate::spectral::SpectralBasis;

pub use align::{complex_rmsd, interface_indices, interface_rmsd, kabsch, RigidTransform, TransformJson};
pub use dock::{
    rigid_dock, ChannelCorrelation, DockOptions, DockReport, DockResult, DockTiming, MIN_INTERFACE_VERTICES,
};
pub use interface::{extract_interface, interface_submesh, Interface, DEFAULT_INTERFACE_THRESHOLD};

/// Ridge added to every row system, relative to `trace(AAᵀ)/k₁`.
pub const DEFAULT_RIDGE_SCALE: f64 = 1e-10;

/// Interface distance threshold for interface RMSD, in Å.
pub const DEFAULT_RMSD_INTERFACE_THRESHOLD: f64 = 8.0;

/// `C: k₂ × k₁`, taking source spectral coefficients to target ones.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalMap {
    pub c: DMatrix<f64>,
    pub source_id: String,
    pub target_id: String,
    pub alpha: f64,
    pub ridge: f64,
    /// `‖CA − B‖_F` on the descriptors it was fitted to.
    pub residual: f64,
}

/// Solves `min ‖CA − B‖²_F + α‖C Λ_M − Λ_N C‖²_F` row by row with the default ridge.
pub fn solve_fmap(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    eigs_m: &[f64],
    eigs_n: &[f64],
    alpha: f64,
) -> Result<FunctionalMap> {
    solve_fmap_with_ridge(a, b, eigs_m, eigs_n, alpha, DEFAULT_RIDGE_SCALE)
}

/// Row `i` of `C` is `(bᵢ Aᵀ)(AAᵀ + α D_i + ρ I)⁻¹` with
/// `D_i = diag((λ^M_j − λ^N_i)²)` and `ρ = ridge_scale · trace(AAᵀ)/k₁`.
pub fn solve_fmap_with_ridge(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    eigs_m: &[f64],
    eigs_n: &[f64],
    alpha: f64,
    ridge_scale: f64,
) -> Result<FunctionalMap> {
    let (k1, k2) = (a.nrows(), b.nrows());
    if a.ncols() != b.ncols() || a.ncols() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "descriptor counts differ or are zero: {} vs {}",
            a.ncols(),
            b.ncols()
        )));
    }
    if eigs_m.len() != k1 || eigs_n.len() != k2 {
        return Err(Error::DimensionMismatch(format!(
            "coefficient rows ({k1}, {k2}) do not match eigenvalue counts ({}, {})",
            eigs_m.len(),
            eigs_n.len()
        )));
    }
    if !(alpha.is_finite() && alpha >= 0.0) || !(ridge_scale.is_finite() && ridge_scale >= 0.0) {
        return Err(Error::InvalidParameter(
            "alpha and ridge must be finite and >= 0".into(),
        ));
    }
    if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("non-finite descriptor coefficients".into()));
    }
    if a.amax() == 0.0 || b.amax() == 0.0 {
        return Err(Error::Degenerate("all-zero descriptor coefficients".into()));
    }
    let aat = a * a.transpose();
    let ridge = ridge_scale * aat.trace() / k1 as f64;
    let bat = b * a.transpose();

    let rows: Vec<Result<DVector<f64>>> = (0..k2)
        .into_par_iter()
        .map(|i| {
            let mut m = aat.clone();
            for j in 0..k1 {
                let d = eigs_m[j] - eigs_n[i];
                m[(j, j)] += alpha * d * d + ridge;
            }
            let rhs = bat.row(i).transpose();
            match m.clone().cholesky() {
                Some(ch) => Ok(ch.solve(&rhs)),
                None => m
                    .lu()
                    .solve(&rhs)
                    .ok_or_else(|| Error::Degenerate(format!("functional map row {i} is singular"))),
            }
        })
        .collect();
    let mut c = DMatrix::zeros(k2, k1);
    for (i, r) in rows.into_iter().enumerate() {
        c.row_mut(i).copy_from(&r?.transpose());
    }
    let residual = (&c * a - b).norm();
    Ok(FunctionalMap {
        c,
        source_id: String::new(),
        target_id: String::new(),
        alpha,
        ridge,
        residual,
    })
}

/// [`solve_fmap`] on coefficients computed against two bases, recording their ids.
pub fn solve_fmap_between(
    source: &SpectralCoeffs,
    target: &SpectralCoeffs,
    basis_m: &SpectralBasis,
    basis_n: &SpectralBasis,
    alpha: f64,
) -> Result<FunctionalMap> {
    let mut f = solve_fmap(
        &source.coeffs,
        &target.coeffs,
        &basis_m.eigenvalues,
        &basis_n.eigenvalues,
        alpha,
    )?;
    f.source_id = basis_m.identity();
    f.target_id = basis_n.identity();
    Ok(f)
}

/// For each target vertex, the source vertex it corresponds to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexCorrespondence {
    pub mapping: Vec<usize>,
    /// Distance in the spectral embedding.
    pub distances: Vec<f64>,
}

/// Nearest neighbour of each row of `Z_N` among the rows of `Z_M Cᵀ`;
/// ties go to the lowest source index.
pub fn fmap_to_p2p(
    fmap: &FunctionalMap,
    basis_m: &SpectralBasis,
    basis_n: &SpectralBasis,
) -> Result<VertexCorrespondence> {
    fmap_to_p2p_raw(&fmap.c, &basis_m.vectors, &basis_n.vectors)
}

pub fn fmap_to_p2p_raw(c: &DMatrix<f64>, z_m: &DMatrix<f64>, z_n: &DMatrix<f64>) -> Result<VertexCorrespondence> {
    if c.ncols() != z_m.ncols() || c.nrows() != z_n.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "map is {}x{}, bases have {} and {} columns",
            c.nrows(),
            c.ncols(),
            z_m.ncols(),
            z_n.ncols()
        )));
    }
    if z_m.nrows() == 0 {
        return Err(Error::EmptyMesh);
    }
    let emb = z_m * c.transpose();
    let k = emb.ncols();
    // row-major copies for contiguous scans
    let src: Vec<f64> = emb.transpose().as_slice().to_vec();
    let tgt: Vec<f64> = z_n.transpose().as_slice().to_vec();
    let (mapping, distances): (Vec<usize>, Vec<f64>) = (0..z_n.nrows())
        .into_par_iter()
        .map(|y| {
            let q = &tgt[y * k..(y + 1) * k];
            let mut best = (0, f64::INFINITY);
            for (x, row) in src.chunks_exact(k.max(1)).enumerate().take(z_m.nrows()) {
                let d: f64 = row.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best.1 {
                    best = (x, d);
                }
            }
            (best.0, best.1.sqrt())
        })
        .unzip();
    Ok(VertexCorrespondence { mapping, distances })
}
