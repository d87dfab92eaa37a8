//! Mesh cleanup: vertex welding, degenerate-face removal, largest component.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::grid::PointGrid;

use super::{triangle_area, TriangleMesh};

/// Default welding distance in length units (Å for molecular surfaces).
pub const DEFAULT_MERGE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct CleanupReport {
    pub merged_vertices: usize,
    pub degenerate_faces: usize,
    pub zero_area_faces: usize,
    pub duplicate_faces: usize,
    pub dropped_components: usize,
    pub dropped_component_faces: usize,
    pub unreferenced_vertices: usize,
}

impl CleanupReport {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

impl fmt::Display for CleanupReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "clean");
        }
        let mut parts = Vec::new();
        let plural = |n: usize, s: &str| format!("{n} {s}{}", if n == 1 { "" } else { "s" });
        if self.merged_vertices > 0 {
            parts.push(format!("{} merged", plural(self.merged_vertices, "vertex")));
        }
        if self.degenerate_faces > 0 {
            parts.push(format!(
                "{} with repeated vertices",
                plural(self.degenerate_faces, "face")
            ));
        }
        if self.zero_area_faces > 0 {
            parts.push(format!("{} with zero area", plural(self.zero_area_faces, "face")));
        }
        if self.duplicate_faces > 0 {
            parts.push(format!("{} duplicated", plural(self.duplicate_faces, "face")));
        }
        if self.dropped_components > 0 {
            parts.push(format!(
                "{} dropped ({})",
                plural(self.dropped_components, "component"),
                plural(self.dropped_component_faces, "face")
            ));
        }
        if self.unreferenced_vertices > 0 {
            parts.push(format!("{} unreferenced", plural(self.unreferenced_vertices, "vertex")));
        }
        write!(f, "{}", parts.join(", "))
    }
}

/// Welds vertices closer than `merge_eps`, removes degenerate and duplicate
/// faces, keeps the largest connected component and drops unused vertices.
///
/// Surviving vertices keep their original relative order.
pub fn cleanup_mesh(mesh: &TriangleMesh, merge_eps: f64) -> Result<(TriangleMesh, CleanupReport)> {
    cleanup_mesh_mapped(mesh, merge_eps).map(|(m, r, _)| (m, r))
}

/// [`cleanup_mesh`], also returning the input index of every output vertex.
pub fn cleanup_mesh_mapped(mesh: &TriangleMesh, merge_eps: f64) -> Result<(TriangleMesh, CleanupReport, Vec<usize>)> {
    if !(merge_eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "merge_eps must be non-negative, got {merge_eps}"
        )));
    }
    let mut report = CleanupReport::default();
    let verts = mesh.vertices();

    // weld: each vertex maps to the lowest-index vertex within eps
    let mut rep: Vec<usize> = (0..verts.len()).collect();
    if merge_eps > 0.0 && !verts.is_empty() {
        let grid = PointGrid::new(verts, merge_eps);
        for i in 0..verts.len() {
            if rep[i] != i {
                continue;
            }
            for (j, _) in grid.within(&verts[i], merge_eps) {
                if j > i && rep[j] == j {
                    rep[j] = i;
                    report.merged_vertices += 1;
                }
            }
        }
    }

    let mut seen = BTreeSet::new();
    let mut faces = Vec::with_capacity(mesh.face_count());
    for f in mesh.faces() {
        let g = f.map(|v| rep[v]);
        if g[0] == g[1] || g[1] == g[2] || g[0] == g[2] {
            report.degenerate_faces += 1;
            continue;
        }
        let p = [verts[g[0]], verts[g[1]], verts[g[2]]];
        let longest = (p[1] - p[0]).norm().max((p[2] - p[1]).norm()).max((p[0] - p[2]).norm());
        let area = triangle_area(&p);
        if !(area > f64::EPSILON * longest * longest) {
            report.zero_area_faces += 1;
            continue;
        }
        let mut key = g;
        key.sort_unstable();
        if !seen.insert(key) {
            report.duplicate_faces += 1;
            continue;
        }
        faces.push(g);
    }
    if faces.is_empty() {
        return Err(Error::EmptyMesh);
    }

    let welded = TriangleMesh::new_unchecked(verts.to_vec(), faces);
    let mut components = welded.face_components();
    if components.len() > 1 {
        let area = |c: &Vec<usize>| c.iter().map(|&f| welded.face_area(f)).sum::<f64>();
        let best = (0..components.len())
            .max_by(|&a, &b| {
                components[a]
                    .len()
                    .cmp(&components[b].len())
                    .then(area(&components[a]).total_cmp(&area(&components[b])))
                    // prefer the earlier component on a full tie
                    .then(b.cmp(&a))
            })
            .expect("non-empty");
        report.dropped_components = components.len() - 1;
        report.dropped_component_faces = welded.face_count() - components[best].len();
        components = vec![components.swap_remove(best)];
    }
    let keep_faces = &components[0];

    let mut used = vec![false; verts.len()];
    for &f in keep_faces {
        for &v in &welded.faces()[f] {
            used[v] = true;
        }
    }
    let mut new_index = vec![usize::MAX; verts.len()];
    let mut new_verts = Vec::new();
    let mut source = Vec::new();
    for (i, p) in verts.iter().enumerate() {
        if used[i] {
            new_index[i] = new_verts.len();
            new_verts.push(*p);
            source.push(i);
        } else if rep[i] == i {
            report.unreferenced_vertices += 1;
        }
    }
    let new_faces = keep_faces
        .iter()
        .map(|&f| welded.faces()[f].map(|v| new_index[v]))
        .collect();
    Ok((TriangleMesh::new_unchecked(new_verts, new_faces), report, source))
}
