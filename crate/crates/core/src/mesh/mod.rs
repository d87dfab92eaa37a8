//! Triangle meshes, file formats, cleanup and synthetic fixtures.

mod atoms;
mod cleanup;
mod fixtures;
mod icosphere;
mod io;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{Matrix3, Vector3};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use atoms::{parse_atoms, AtomFormat, AtomReport, AtomSet, ResidueLabel};
pub use cleanup::{cleanup_mesh, cleanup_mesh_mapped, CleanupReport, DEFAULT_MERGE_EPS};
pub use fixtures::{bumped_icosphere, grid_patch};
pub use icosphere::icosphere;
pub use io::{load_mesh, load_mesh_path, write_obj, write_off, LoadReport, MeshFormat};

pub type Point = Vector3<f64>;

/// An undirected edge with its incident faces and the corners opposite to it.
#[derive(Debug, Clone)]
pub struct Edge {
    /// Endpoints, smaller index first.
    pub v: [usize; 2],
    /// `(face, opposite corner slot 0..3)` for each incident face.
    pub faces: Vec<(usize, usize)>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.faces.len() == 1
    }
}

/// Connectivity and per-face measures derived from a mesh on first use.
#[derive(Debug)]
pub struct Topology {
    pub face_areas: Vec<f64>,
    /// Interior angle at each corner of each face.
    pub corner_angles: Vec<[f64; 3]>,
    pub vertex_faces: Vec<Vec<usize>>,
    pub edges: Vec<Edge>,
    pub boundary_vertex: Vec<bool>,
}

/// A triangulated 2-manifold: vertices in length units and faces as index triples.
#[derive(Debug)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    faces: Vec<[usize; 3]>,
    topology: OnceLock<Topology>,
}

impl Clone for TriangleMesh {
    fn clone(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            faces: self.faces.clone(),
            topology: OnceLock::new(),
        }
    }
}

impl PartialEq for TriangleMesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.faces == other.faces
    }
}

impl TriangleMesh {
    /// Builds a mesh, checking face indices and rejecting repeated-vertex faces.
    pub fn new(vertices: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(Error::IndexOutOfRange {
                        face: fi,
                        index: v,
                        vertex_count: n,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {fi} repeats a vertex: {f:?}")));
            }
        }
        if let Some((i, _)) = vertices
            .iter()
            .enumerate()
            .find(|(_, p)| !p.iter().all(|c| c.is_finite()))
        {
            return Err(Error::InvalidMesh(format!("vertex {i} has a non-finite coordinate")));
        }
        Ok(Self {
            vertices,
            faces,
            topology: OnceLock::new(),
        })
    }

    pub(crate) fn new_unchecked(vertices: Vec<Point>, faces: Vec<[usize; 3]>) -> Self {
        Self {
            vertices,
            faces,
            topology: OnceLock::new(),
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn topology(&self) -> &Topology {
        self.topology
            .get_or_init(|| Topology::build(&self.vertices, &self.faces))
    }

    pub fn edge_count(&self) -> usize {
        self.topology().edges.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.face_count() as i64
    }

    pub fn is_closed(&self) -> bool {
        self.topology().edges.iter().all(|e| !e.is_boundary())
    }

    pub fn face_area(&self, f: usize) -> f64 {
        triangle_area(&self.corners(f))
    }

    pub fn corners(&self, f: usize) -> [Point; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Checks the manifold-edge invariant: no edge shared by more than two faces.
    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.topology().edges.iter().find(|e| e.faces.len() > 2) {
            return Err(Error::InvalidMesh(format!(
                "non-manifold edge ({}, {}) shared by {} faces",
                e.v[0],
                e.v[1],
                e.faces.len()
            )));
        }
        Ok(())
    }

    /// Same faces, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        Ok(Self::new_unchecked(vertices, self.faces.clone()))
    }

    /// Applies `x ↦ R x + t` to every vertex.
    pub fn transformed(&self, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Self {
        let vertices = self.vertices.iter().map(|p| rotation * p + translation).collect();
        Self::new_unchecked(vertices, self.faces.clone())
    }

    /// Reorders vertices so that new vertex `i` is old vertex `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.vertices.len();
        if perm.len() != n {
            return Err(Error::DimensionMismatch("permutation length".into()));
        }
        let mut inverse = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || inverse[old] != usize::MAX {
                return Err(Error::InvalidParameter("not a permutation".into()));
            }
            inverse[old] = new;
        }
        let vertices = perm.iter().map(|&o| self.vertices[o]).collect();
        let faces = self.faces.iter().map(|f| f.map(|v| inverse[v])).collect();
        Ok(Self::new_unchecked(vertices, faces))
    }

    /// SHA-256 over the little-endian vertex coordinates and face indices.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.vertices.len() as u64).to_le_bytes());
        for p in &self.vertices {
            for c in p.iter() {
                h.update(c.to_le_bytes());
            }
        }
        h.update((self.faces.len() as u64).to_le_bytes());
        for f in &self.faces {
            for &v in f {
                h.update((v as u64).to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// Mean of the vertex positions (unweighted).
    pub fn vertex_centroid(&self) -> Point {
        let n = self.vertices.len().max(1) as f64;
        self.vertices.iter().fold(Point::zeros(), |a, p| a + p) / n
    }

    /// Connected components over shared edges, as lists of face indices.
    pub fn face_components(&self) -> Vec<Vec<usize>> {
        let topo = self.topology();
        let mut comp = vec![usize::MAX; self.faces.len()];
        let mut out = Vec::new();
        for seed in 0..self.faces.len() {
            if comp[seed] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![seed];
            comp[seed] = id;
            let mut head = 0;
            while head < members.len() {
                let f = members[head];
                head += 1;
                for &v in &self.faces[f] {
                    for &g in &topo.vertex_faces[v] {
                        if comp[g] == usize::MAX {
                            comp[g] = id;
                            members.push(g);
                        }
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

pub fn triangle_area(p: &[Point; 3]) -> f64 {
    0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm()
}

fn corner_angle(at: &Point, a: &Point, b: &Point) -> f64 {
    let u = a - at;
    let v = b - at;
    // atan2 keeps accuracy for nearly flat corners
    u.cross(&v).norm().atan2(u.dot(&v))
}

impl Topology {
    fn build(vertices: &[Point], faces: &[[usize; 3]]) -> Self {
        let mut face_areas = Vec::with_capacity(faces.len());
        let mut corner_angles = Vec::with_capacity(faces.len());
        let mut vertex_faces = vec![Vec::new(); vertices.len()];
        let mut edge_map: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (fi, f) in faces.iter().enumerate() {
            let p = [vertices[f[0]], vertices[f[1]], vertices[f[2]]];
            face_areas.push(triangle_area(&p));
            corner_angles.push([
                corner_angle(&p[0], &p[1], &p[2]),
                corner_angle(&p[1], &p[2], &p[0]),
                corner_angle(&p[2], &p[0], &p[1]),
            ]);
            for c in 0..3 {
                vertex_faces[f[c]].push(fi);
                let a = f[(c + 1) % 3];
                let b = f[(c + 2) % 3];
                edge_map.entry((a.min(b), a.max(b))).or_default().push((fi, c));
            }
        }
        let edges: Vec<Edge> = edge_map
            .into_iter()
            .map(|((a, b), faces)| Edge { v: [a, b], faces })
            .collect();
        let mut boundary_vertex = vec![false; vertices.len()];
        for e in edges.iter().filter(|e| e.is_boundary()) {
            boundary_vertex[e.v[0]] = true;
            boundary_vertex[e.v[1]] = true;
        }
        Self {
            face_areas,
            corner_angles,
            vertex_faces,
            edges,
            boundary_vertex,
        }
    }
}

/// Total surface area (sum of triangle areas).
pub fn surface_area(mesh: &TriangleMesh) -> f64 {
    mesh.topology().face_areas.iter().sum()
}

/// Sum of interior angles minus the flat-angle total, per vertex; `2π` for
/// interior vertices and `π` on the boundary.
pub fn angle_defects(mesh: &TriangleMesh) -> Vec<f64> {
    let topo = mesh.topology();
    let mut sum = vec![0.0; mesh.vertex_count()];
    for (f, angles) in mesh.faces().iter().zip(&topo.corner_angles) {
        for c in 0..3 {
            sum[f[c]] += angles[c];
        }
    }
    sum.iter()
        .zip(&topo.boundary_vertex)
        .map(|(s, &b)| if b { PI - s } else { 2.0 * PI - s })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tetrahedron() -> TriangleMesh {
        let s = 1.0 / 2f64.sqrt();
        let v = vec![
            Point::new(1.0, 0.0, -s) * 0.5,
            Point::new(-1.0, 0.0, -s) * 0.5,
            Point::new(0.0, 1.0, s) * 0.5,
            Point::new(0.0, -1.0, s) * 0.5,
        ];
        TriangleMesh::new(v, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]).unwrap()
    }

    #[test]
    fn equilateral_triangle_area() {
        let m = TriangleMesh::new(
            vec![
                Point::zeros(),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.5, 3f64.sqrt() / 2.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!((surface_area(&m) - 3f64.sqrt() / 4.0).abs() < 1e-15);
        assert!(!m.is_closed());
        assert_eq!(m.edge_count(), 3);
    }

    #[test]
    fn unit_tetrahedron_area_and_euler() {
        let t = tetrahedron();
        assert!((surface_area(&t) - 3f64.sqrt()).abs() < 1e-14);
        assert_eq!(t.edge_count(), 6);
        assert_eq!(t.euler_characteristic(), 2);
        let total: f64 = angle_defects(&t).iter().sum();
        assert!((total - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_faces() {
        let v = vec![Point::zeros(); 3];
        assert!(matches!(
            TriangleMesh::new(v.clone(), vec![[0, 1, 7]]),
            Err(Error::IndexOutOfRange { index: 7, .. })
        ));
        assert!(matches!(
            TriangleMesh::new(v, vec![[0, 1, 1]]),
            Err(Error::InvalidMesh(_))
        ));
    }

    #[test]
    fn non_manifold_edge_fails_validation() {
        let v = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, -1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
        ];
        let m = TriangleMesh::new(v, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap();
        assert!(m.validate().is_err());
    }

    #[test]
    fn permutation_round_trip() {
        let t = tetrahedron();
        let p = t.permuted(&[2, 0, 3, 1]).unwrap();
        assert_eq!(p.vertices()[0], t.vertices()[2]);
        assert!((surface_area(&p) - surface_area(&t)).abs() < 1e-15);
        assert!(t.permuted(&[0, 0, 1, 2]).is_err());
    }
}
