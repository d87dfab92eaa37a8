//! Binary container for spectral bases.
//!
//! Layout, all integers `u64` and all reals `f64`, little-endian:
//!
//! ```text
//! magic      8 bytes  "SHBASIS1"
//! N, k
//! eigenvalues         k reals
//! Z                   N·k reals, column-major
//! nnz
//! row_ptr             N+1 integers   (CSR of the mass matrix B)
//! col                 nnz integers
//! val                 nnz reals
//! ```
//!
//! A JSON sidecar ([`BasisProvenance`]) records where the basis came from.

use std::io::{Read, Write};
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseSymMatrix;

use super::{SolverOptions, SpectralBasis, SpectrumRequest};

pub const BASIS_MAGIC: &[u8; 8] = b"SHBASIS1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisProvenance {
    pub mesh_hash: String,
    pub vertex_count: usize,
    pub eigenpair_count: usize,
    pub request: SpectrumRequest,
    pub tolerance: f64,
    pub shift: f64,
    pub krylov_dim: usize,
    pub max_residual: f64,
}

impl BasisProvenance {
    pub fn of(basis: &SpectralBasis, options: &SolverOptions) -> Self {
        Self {
            mesh_hash: basis.mesh_hash.clone(),
            vertex_count: basis.vertex_count(),
            eigenpair_count: basis.len(),
            request: basis.request,
            tolerance: options.tolerance,
            shift: basis.shift,
            krylov_dim: basis.krylov_dim,
            max_residual: basis.residuals.iter().copied().fold(0.0, f64::max),
        }
    }
}

pub fn write_basis<W: Write>(basis: &SpectralBasis, mut w: W) -> Result<()> {
    let n = basis.vertex_count();
    let k = basis.len();
    w.write_all(BASIS_MAGIC)?;
    w.write_u64::<LittleEndian>(n as u64)?;
    w.write_u64::<LittleEndian>(k as u64)?;
    for &l in &basis.eigenvalues {
        w.write_f64::<LittleEndian>(l)?;
    }
    for &x in basis.vectors.as_slice() {
        w.write_f64::<LittleEndian>(x)?;
    }
    let b = &basis.mass;
    w.write_u64::<LittleEndian>(b.nnz() as u64)?;
    for &p in b.row_ptr() {
        w.write_u64::<LittleEndian>(p as u64)?;
    }
    for &c in b.col_indices() {
        w.write_u64::<LittleEndian>(c as u64)?;
    }
    for &v in b.values() {
        w.write_f64::<LittleEndian>(v)?;
    }
    Ok(())
}

fn read_len<R: Read>(r: &mut R, what: &str, limit: u64) -> Result<usize> {
    let v = r.read_u64::<LittleEndian>()?;
    if v > limit {
        return Err(Error::Parse {
            line: 0,
            msg: format!("implausible {what} {v} in basis container"),
        });
    }
    Ok(v as usize)
}

/// Reads a basis; `provenance` (from the sidecar) restores hash and request.
pub fn read_basis<R: Read>(mut r: R, provenance: Option<&BasisProvenance>) -> Result<SpectralBasis> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BASIS_MAGIC {
        return Err(Error::Parse {
            line: 0,
            msg: "not a spectral basis container".into(),
        });
    }
    const LIMIT: u64 = 1 << 32;
    let n = read_len(&mut r, "vertex count", LIMIT)?;
    let k = read_len(&mut r, "basis size", n as u64)?;
    let mut eigenvalues = vec![0.0; k];
    r.read_f64_into::<LittleEndian>(&mut eigenvalues)?;
    let mut z = vec![0.0; n * k];
    r.read_f64_into::<LittleEndian>(&mut z)?;
    let nnz = read_len(&mut r, "nnz", (n as u64).saturating_mul(n as u64))?;
    let mut row_ptr = vec![0u64; n + 1];
    r.read_u64_into::<LittleEndian>(&mut row_ptr)?;
    let mut col = vec![0u64; nnz];
    r.read_u64_into::<LittleEndian>(&mut col)?;
    let mut val = vec![0.0; nnz];
    r.read_f64_into::<LittleEndian>(&mut val)?;
    let mass = SparseSymMatrix::from_csr(
        n,
        row_ptr.into_iter().map(|x| x as usize).collect(),
        col.into_iter().map(|x| x as usize).collect(),
        val,
    )?;
    Ok(SpectralBasis {
        eigenvalues,
        vectors: DMatrix::from_vec(n, k, z),
        mass: Arc::new(mass),
        mesh_hash: provenance.map(|p| p.mesh_hash.clone()).unwrap_or_default(),
        request: provenance.map(|p| p.request).unwrap_or(SpectrumRequest::Count(k)),
        residuals: Vec::new(),
        shift: provenance.map(|p| p.shift).unwrap_or(0.0),
        krylov_dim: provenance.map(|p| p.krylov_dim).unwrap_or(0),
    })
}

pub fn read_provenance(json: &str) -> Result<BasisProvenance> {
    serde_json::from_str(json).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })
}
