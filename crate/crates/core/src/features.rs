//! Per-vertex input features: atom descriptors projected onto the surface and
//! concatenated with geometric channels.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PointGrid;
use crate::harmonics::SurfaceField;
use crate::mesh::{AtomSet, TriangleMesh};
use crate::sparse::SparseSymMatrix;

/// Neighbourhood radius for atom projection, in Å.
pub const DEFAULT_PROJECTION_RADIUS: f64 = 6.0;

/// Distances below this are clamped before taking `1/d`.
const MIN_DISTANCE: f64 = 1e-6;

/// Key of the fallback row used for unknown elements.
pub const UNKNOWN_KEY: &str = "other";

/// Fixed-length descriptor per element (or residue) key.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomDescriptorTable {
    columns: Vec<String>,
    rows: BTreeMap<String, Vec<f64>>,
}

impl Default for AtomDescriptorTable {
    /// One-hot element table over C, N, O, S, H, P and `other`.
    fn default() -> Self {
        let keys = ["C", "N", "O", "S", "H", "P", UNKNOWN_KEY];
        let columns = keys.iter().map(|k| format!("is_{k}")).collect();
        let rows = keys
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let mut v = vec![0.0; keys.len()];
                v[i] = 1.0;
                (normalize_key(k), v)
            })
            .collect();
        Self { columns, rows }
    }
}

fn normalize_key(k: &str) -> String {
    k.trim().to_ascii_uppercase()
}

impl AtomDescriptorTable {
    pub fn new(columns: Vec<String>, rows: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidParameter("descriptor table has no columns".into()));
        }
        let rows: BTreeMap<String, Vec<f64>> = rows.into_iter().map(|(k, v)| (normalize_key(&k), v)).collect();
        for (k, v) in &rows {
            if v.len() != columns.len() {
                return Err(Error::DimensionMismatch(format!(
                    "descriptor '{k}' has {} values, table has {} columns",
                    v.len(),
                    columns.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!("descriptor '{k}' is not finite")));
            }
        }
        if !rows.contains_key(&normalize_key(UNKNOWN_KEY)) {
            return Err(Error::InvalidParameter(format!(
                "descriptor table needs an '{UNKNOWN_KEY}' row"
            )));
        }
        Ok(Self { columns, rows })
    }

    /// Parses `key,<column>,...` CSV: a header row starting with `key`, then
    /// one row per element or residue name. Keys are case-insensitive and one
    /// row must be keyed `other`. Lines starting with `#` are ignored.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty descriptor table".into(),
        })?;
        let mut head = header.split(',').map(|s| s.trim().to_string());
        if head.next().as_deref() != Some("key") {
            return Err(Error::Parse {
                line: 1,
                msg: "descriptor table header must start with 'key'".into(),
            });
        }
        let columns: Vec<String> = head.collect();
        let mut rows = BTreeMap::new();
        for (i, l) in lines {
            let mut toks = l.split(',').map(str::trim);
            let key = toks.next().unwrap_or_default().to_string();
            let vals = toks
                .map(|t| {
                    t.parse::<f64>().map_err(|_| Error::Parse {
                        line: i + 1,
                        msg: format!("invalid number '{t}'"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if vals.len() != columns.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected {} values, found {}", columns.len(), vals.len()),
                });
            }
            if rows.insert(normalize_key(&key), vals).is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("duplicate key '{key}'"),
                });
            }
        }
        Self::new(columns, rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Row for `key`, or the `other` row.
    pub fn lookup(&self, key: &str) -> &[f64] {
        self.rows
            .get(&normalize_key(key))
            .or_else(|| self.rows.get(&normalize_key(UNKNOWN_KEY)))
            .expect("table has a fallback row")
    }

    fn lookup_atom(&self, atoms: &AtomSet, a: usize) -> &[f64] {
        if let Some(v) = self.rows.get(&normalize_key(&atoms.elements[a])) {
            return v;
        }
        if let Some(res) = &atoms.residues {
            if let Some(v) = self.rows.get(&normalize_key(&res[a].residue)) {
                return v;
            }
        }
        self.lookup(UNKNOWN_KEY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    /// Atoms within this distance (Å), boundary inclusive.
    Radius(f64),
    /// The `k` nearest atoms, ties broken by atom index.
    Nearest(usize),
}

impl Default for Neighborhood {
    fn default() -> Self {
        Self::Radius(DEFAULT_PROJECTION_RADIUS)
    }
}

/// How `1/d` enters the per-vertex average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceWeighting {
    /// Average `[u, 1/d]` uniformly over neighbours.
    #[default]
    Feature,
    /// Average `u` with weights `1/d`; the `1/d` channel stays a plain mean.
    Weight,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProjectionOptions {
    pub neighborhood: Neighborhood,
    pub weighting: DistanceWeighting,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProjectionReport {
    /// Vertices with no atom in range; their features are zero.
    pub empty_vertices: usize,
}

/// Averages `[u, 1/d]` over each vertex's neighbouring atoms. Channels are the
/// table columns, `charge` when the atoms carry charges, then `inv_dist`.
pub fn project_atom_features(
    atoms: &AtomSet,
    mesh: &TriangleMesh,
    table: &AtomDescriptorTable,
    options: &ProjectionOptions,
) -> Result<(SurfaceField, ProjectionReport)> {
    if atoms.is_empty() {
        return Err(Error::EmptyAtomSet);
    }
    match options.neighborhood {
        Neighborhood::Radius(r) if !(r.is_finite() && r > 0.0) => {
            return Err(Error::InvalidParameter(format!(
                "projection radius must be > 0, got {r}"
            )))
        }
        Neighborhood::Nearest(0) => return Err(Error::InvalidParameter("k_nearest must be >= 1".into())),
        _ => {}
    }
    let grid = match options.neighborhood {
        Neighborhood::Radius(r) => PointGrid::new(&atoms.positions, r),
        Neighborhood::Nearest(_) => PointGrid::with_auto_cell(&atoms.positions),
    };
    let charges = atoms.charges.as_deref();
    let w = table.width();
    let width = w + usize::from(charges.is_some()) + 1;

    let rows: Vec<Option<Vec<f64>>> = mesh
        .vertices()
        .par_iter()
        .map(|x| {
            let nbrs = match options.neighborhood {
                Neighborhood::Radius(r) => grid.within(x, r),
                Neighborhood::Nearest(k) => grid.nearest_k(x, k),
            };
            if nbrs.is_empty() {
                return None;
            }
            let mut acc = vec![0.0; width];
            let mut wsum = 0.0;
            for &(a, d) in &nbrs {
                let inv = 1.0 / d.max(MIN_DISTANCE);
                let wt = match options.weighting {
                    DistanceWeighting::Feature => 1.0,
                    DistanceWeighting::Weight => inv,
                };
                for (s, u) in acc.iter_mut().zip(table.lookup_atom(atoms, a)) {
                    *s += wt * u;
                }
                if let Some(q) = charges {
                    acc[w] += wt * q[a];
                }
                acc[width - 1] += inv;
                wsum += wt;
            }
            let n = nbrs.len() as f64;
            for s in &mut acc[..width - 1] {
                *s /= wsum;
            }
            acc[width - 1] /= n;
            Some(acc)
        })
        .collect();

    let empty_vertices = rows.iter().filter(|r| r.is_none()).count();
    let values = DMatrix::from_fn(rows.len(), width, |i, j| rows[i].as_ref().map_or(0.0, |r| r[j]));
    let mut names = table.columns.clone();
    if charges.is_some() {
        names.push("charge".into());
    }
    names.push("inv_dist".into());
    let field = SurfaceField::new(values, names)?.on_mesh(mesh);
    Ok((field, ProjectionReport { empty_vertices }))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AssemblyReport {
    /// Channels with zero weighted variance, output as zeros when standardizing.
    pub constant_channels: Vec<String>,
}

/// Concatenates `geom` and `chem` channels as `geom:<name>` and `chem:<name>`.
/// With a mass matrix, each channel is z-scored with B-weighted mean and
/// variance.
pub fn assemble_input_features(
    geom: &SurfaceField,
    chem: &SurfaceField,
    standardize: Option<&SparseSymMatrix>,
) -> Result<(SurfaceField, AssemblyReport)> {
    let n = geom.vertex_count();
    if chem.vertex_count() != n {
        return Err(Error::DimensionMismatch(format!(
            "geometric field has {} vertices, chemical field {}",
            n,
            chem.vertex_count()
        )));
    }
    let mesh_hash = match (&geom.mesh_hash, &chem.mesh_hash) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::HashMismatch {
                field: b.clone(),
                basis: a.clone(),
            })
        }
        (a, b) => a.clone().or_else(|| b.clone()),
    };
    let mut values = DMatrix::zeros(n, geom.channel_count() + chem.channel_count());
    values.columns_mut(0, geom.channel_count()).copy_from(&geom.values);
    values
        .columns_mut(geom.channel_count(), chem.channel_count())
        .copy_from(&chem.values);
    let names: Vec<String> = geom
        .names
        .iter()
        .map(|s| format!("geom:{s}"))
        .chain(chem.names.iter().map(|s| format!("chem:{s}")))
        .collect();

    let mut report = AssemblyReport::default();
    if let Some(mass) = standardize {
        if mass.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "mass matrix of size {} for {n} vertices",
                mass.dim()
            )));
        }
        let w = mass.mul_vec(&DVector::from_element(n, 1.0));
        let total = w.sum();
        for (j, mut col) in values.column_iter_mut().enumerate() {
            let mean = col.dot(&w) / total;
            col.add_scalar_mut(-mean);
            let c: Vec<f64> = col.iter().copied().collect();
            let var = mass.bilinear(&c, &c) / total;
            let scale = c.iter().fold(mean.abs(), |m, x| m.max(x.abs()));
            if var <= (1e-12 * scale).powi(2) {
                col.fill(0.0);
                report.constant_channels.push(names[j].clone());
            } else {
                col /= var.sqrt();
            }
        }
    }
    let mut field = SurfaceField::new(values, names)?;
    field.mesh_hash = mesh_hash;
    Ok((field, report))
}
