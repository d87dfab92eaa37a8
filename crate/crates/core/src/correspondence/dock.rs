use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::align::{kabsch, RigidTransform, TransformJson};
use super::interface::interface_submesh;
use super::{fmap_to_p2p, solve_fmap_with_ridge, VertexCorrespondence, DEFAULT_RIDGE_SCALE};
use crate::error::{Error, Result};
use crate::geometry::vertex_normals;
use crate::harmonics::{to_spectral, SurfaceField};
use crate::mesh::{Point, TriangleMesh};
use crate::spectral::{compute_basis, SolverOptions, SpectralBasis, SpectrumRequest};

pub const MIN_INTERFACE_VERTICES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DockOptions {
    /// Eigenpairs computed on each interface submesh.
    pub spectrum: SpectrumRequest,
    pub solver: SolverOptions,
    /// Weight of the eigenvalue commutativity term in the functional map.
    pub alpha: f64,
    pub ridge_scale: f64,
    pub min_interface: usize,
    /// Distance along the receptor's outward normals at which ligand
    /// interface points are placed; 0 superimposes the two interfaces.
    pub contact_offset: f64,
}

impl Default for DockOptions {
    fn default() -> Self {
        Self {
            spectrum: SpectrumRequest::default(),
            solver: SolverOptions::default(),
            alpha: 1.0,
            ridge_scale: DEFAULT_RIDGE_SCALE,
            min_interface: MIN_INTERFACE_VERTICES,
            contact_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DockTiming {
    pub submesh_s: f64,
    pub spectra_s: f64,
    pub fmap_s: f64,
    pub p2p_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelCorrelation {
    pub channel: String,
    /// Pearson r, absent when either side is constant.
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DockReport {
    pub transform: TransformJson,
    pub ligand_interface_vertices: usize,
    pub receptor_interface_vertices: usize,
    pub ligand_eigenpairs: usize,
    pub receptor_eigenpairs: usize,
    pub correlations: Vec<ChannelCorrelation>,
    pub fmap_residual: f64,
    pub fmap_relative_residual: f64,
    /// RMS distance of the aligned ligand interface to its matched targets.
    pub alignment_rmsd: f64,
    pub timing: DockTiming,
}

#[derive(Debug, Clone)]
pub struct DockResult {
    /// Moves the ligand onto its docked pose.
    pub transform: RigidTransform,
    pub report: DockReport,
    /// Ligand interface vertices (original indices).
    pub ligand_vertices: Vec<usize>,
    /// Matched receptor vertex (original index) per ligand interface vertex.
    pub receptor_matches: Vec<usize>,
}

struct Side {
    mesh: TriangleMesh,
    map: Vec<usize>,
    basis: SpectralBasis,
}

fn prepare(mesh: &TriangleMesh, mask: &[usize], opts: &DockOptions) -> Result<(TriangleMesh, Vec<usize>)> {
    let too_small = |size| Error::InterfaceTooSmall {
        size,
        min: opts.min_interface,
    };
    if mask.len() < opts.min_interface {
        return Err(too_small(mask.len()));
    }
    let (sub, map) = interface_submesh(mesh, mask).map_err(|e| match e {
        Error::InterfaceTooSmall { .. } => too_small(0),
        e => e,
    })?;
    if sub.vertex_count() < opts.min_interface {
        return Err(too_small(sub.vertex_count()));
    }
    Ok((sub, map))
}

fn spectrum(mesh: &TriangleMesh, opts: &DockOptions) -> Result<SpectralBasis> {
    let request = match opts.spectrum {
        SpectrumRequest::Count(k) => SpectrumRequest::Count(k.min(mesh.vertex_count())),
        r => r,
    };
    compute_basis(mesh, request, &opts.solver)
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    let scale = a
        .iter()
        .chain(b)
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let tiny = (1e-12 * scale).powi(2) * n;
    (saa > tiny && sbb > tiny).then(|| sab / (saa * sbb).sqrt())
}

/// Rigid docking from given interface masks and matching descriptor fields.
///
/// Both interfaces are cut out as submeshes with their own spectra, the
/// descriptors are projected onto them, and a functional map from receptor to
/// ligand is converted to vertex matches and aligned with Kabsch.
#[allow(clippy::too_many_arguments)]
pub fn rigid_dock(
    ligand: &TriangleMesh,
    receptor: &TriangleMesh,
    fields_l: &SurfaceField,
    fields_r: &SurfaceField,
    mask_l: &[usize],
    mask_r: &[usize],
    options: &DockOptions,
) -> Result<DockResult> {
    let start = Instant::now();
    if fields_l.vertex_count() != ligand.vertex_count() || fields_r.vertex_count() != receptor.vertex_count() {
        return Err(Error::DimensionMismatch(
            "descriptor fields do not match their meshes".into(),
        ));
    }
    if fields_l.names != fields_r.names {
        return Err(Error::DimensionMismatch(
            "ligand and receptor descriptors have different channels".into(),
        ));
    }
    let (sub_l, map_l) = prepare(ligand, mask_l, options)?;
    let (sub_r, map_r) = prepare(receptor, mask_r, options)?;
    let t_sub = start.elapsed().as_secs_f64();

    let (bl, br) = rayon::join(|| spectrum(&sub_l, options), || spectrum(&sub_r, options));
    let lig = Side {
        basis: bl?,
        mesh: sub_l,
        map: map_l,
    };
    let rec = Side {
        basis: br?,
        mesh: sub_r,
        map: map_r,
    };
    let t_spec = start.elapsed().as_secs_f64();

    let f_l = fields_l.select_rows(&lig.map).on_mesh(&lig.mesh);
    let f_r = fields_r.select_rows(&rec.map).on_mesh(&rec.mesh);
    let a = to_spectral(&f_r, &rec.basis)?;
    let b = to_spectral(&f_l, &lig.basis)?;
    let mut fmap = solve_fmap_with_ridge(
        &a.coeffs,
        &b.coeffs,
        &rec.basis.eigenvalues,
        &lig.basis.eigenvalues,
        options.alpha,
        options.ridge_scale,
    )?;
    fmap.source_id = rec.basis.identity();
    fmap.target_id = lig.basis.identity();
    let t_fmap = start.elapsed().as_secs_f64();

    let VertexCorrespondence { mapping, .. } = fmap_to_p2p(&fmap, &rec.basis, &lig.basis)?;
    let t_p2p = start.elapsed().as_secs_f64();

    let normals = if options.contact_offset != 0.0 {
        Some(vertex_normals(receptor)?)
    } else {
        None
    };
    let receptor_matches: Vec<usize> = mapping.iter().map(|&x| rec.map[x]).collect();
    let p: Vec<Point> = lig.map.iter().map(|&v| ligand.vertices()[v]).collect();
    let q: Vec<Point> = receptor_matches
        .iter()
        .map(|&v| {
            let x = receptor.vertices()[v];
            match &normals {
                Some(n) => x + n[v] * options.contact_offset,
                None => x,
            }
        })
        .collect();
    let transform = kabsch(&p, &q, None)?;
    let alignment_rmsd = (p
        .iter()
        .zip(&q)
        .map(|(a, b)| (transform.apply(a) - b).norm_squared())
        .sum::<f64>()
        / p.len() as f64)
        .sqrt();

    let correlations = (0..f_l.channel_count())
        .map(|c| {
            let lv = f_l.channel(c);
            let rv: Vec<f64> = mapping.iter().map(|&x| f_r.values[(x, c)]).collect();
            ChannelCorrelation {
                channel: f_l.names[c].clone(),
                r: pearson(&lv, &rv),
            }
        })
        .collect();
    let b_norm = b.coeffs.norm();
    let report = DockReport {
        transform: transform.to_serde(),
        ligand_interface_vertices: lig.mesh.vertex_count(),
        receptor_interface_vertices: rec.mesh.vertex_count(),
        ligand_eigenpairs: lig.basis.len(),
        receptor_eigenpairs: rec.basis.len(),
        correlations,
        fmap_residual: fmap.residual,
        fmap_relative_residual: fmap.residual / b_norm.max(f64::MIN_POSITIVE),
        alignment_rmsd,
        timing: DockTiming {
            submesh_s: t_sub,
            spectra_s: t_spec - t_sub,
            fmap_s: t_fmap - t_spec,
            p2p_s: t_p2p - t_fmap,
            total_s: start.elapsed().as_secs_f64(),
        },
    };
    Ok(DockResult {
        transform,
        report,
        ligand_vertices: lig.map,
        receptor_matches,
    })
}
