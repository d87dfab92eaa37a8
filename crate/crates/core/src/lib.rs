//! Harmonic analysis on triangulated surfaces.
//!
//! The crate covers the full deterministic path from a surface mesh to its
//! Laplace-Beltrami spectrum and everything built on it:
//!
//! - [`mesh`]: triangle meshes, OFF/OBJ/PLY and XYZ/PDB parsers, cleanup, icospheres
//! - [`geometry`]: vertex normals, Gaussian and mean curvature
//! - [`spectral`]: cotangent stiffness and FEM mass matrices, generalized eigensolver
//! - [`harmonics`]: spectral transforms, propagation filters and their gradients,
//!   heat kernel signatures, coordinate smoothing
//! - [`features`]: atom-to-surface feature projection
//! - [`correspondence`]: functional maps, point-to-point recovery, Kabsch alignment,
//!   RMSD metrics and rigid docking
//!
//! # Sign convention
//!
//! The stiffness matrix is stored as the positive semi-definite operator `L`
//! with `xᵀLx` equal to the Dirichlet energy and `L·1 = 0`. This corresponds
//! to the Laplace-Beltrami operator `Δf = −div(∇f)`, whose eigenvalues are
//! non-negative. "Frequency" always means an eigenvalue `λ`.

// `!(x > 0.0)` is used deliberately so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correspondence;
pub mod error;
pub mod features;
pub mod geometry;
pub mod grid;
pub mod harmonics;
pub mod mesh;
pub mod numfmt;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};

pub use harmonics::{FilterParams, SpectralCoeffs, SurfaceField};
pub use mesh::{AtomSet, TriangleMesh};
pub use sparse::SparseSymMatrix;
pub use spectral::{SpectralBasis, SpectrumRequest};
