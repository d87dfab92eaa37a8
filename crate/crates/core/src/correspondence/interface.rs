use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PointGrid;
use crate::mesh::{cleanup_mesh_mapped, Point, TriangleMesh};

/// Interface vertex distance threshold, in Å.
pub const DEFAULT_INTERFACE_THRESHOLD: f64 = 3.0;

/// Interface vertices of two surfaces in a common frame.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Interface {
    /// Ascending vertex indices of the first mesh.
    pub ligand: Vec<usize>,
    /// Ascending vertex indices of the second mesh.
    pub receptor: Vec<usize>,
    /// Mutual nearest neighbours `(ligand vertex, receptor vertex)`, ascending.
    pub pairs: Vec<(usize, usize)>,
}

impl Interface {
    pub fn is_empty(&self) -> bool {
        self.ligand.is_empty() && self.receptor.is_empty()
    }

    /// The same interface seen from the other mesh.
    pub fn swapped(&self) -> Self {
        let mut pairs: Vec<(usize, usize)> = self.pairs.iter().map(|&(a, b)| (b, a)).collect();
        pairs.sort_unstable();
        Self {
            ligand: self.receptor.clone(),
            receptor: self.ligand.clone(),
            pairs,
        }
    }
}

fn within_threshold(points: &[Point], other: &PointGrid, threshold: f64) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| other.nearest(&points[i]).is_some_and(|(_, d)| d <= threshold))
        .collect()
}

/// Vertices of each mesh within `threshold` of the other mesh's vertices,
/// paired by mutual nearest neighbour among the selected vertices. An empty
/// interface is returned as such, not as an error.
pub fn extract_interface(ligand: &TriangleMesh, receptor: &TriangleMesh, threshold: f64) -> Result<Interface> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "interface threshold must be > 0, got {threshold}"
        )));
    }
    let (pl, pr) = (ligand.vertices(), receptor.vertices());
    let gl = PointGrid::new(pl, threshold);
    let gr = PointGrid::new(pr, threshold);
    let sel_l = within_threshold(pl, &gr, threshold);
    let sel_r = within_threshold(pr, &gl, threshold);

    let sub_l: Vec<Point> = sel_l.iter().map(|&i| pl[i]).collect();
    let sub_r: Vec<Point> = sel_r.iter().map(|&i| pr[i]).collect();
    let mut pairs = Vec::new();
    if !sub_l.is_empty() && !sub_r.is_empty() {
        let gsl = PointGrid::new(&sub_l, threshold);
        let gsr = PointGrid::new(&sub_r, threshold);
        for (a, p) in sub_l.iter().enumerate() {
            let (b, _) = gsr.nearest(p).expect("non-empty");
            let (back, _) = gsl.nearest(&sub_r[b]).expect("non-empty");
            if back == a {
                pairs.push((sel_l[a], sel_r[b]));
            }
        }
    }
    Ok(Interface {
        ligand: sel_l,
        receptor: sel_r,
        pairs,
    })
}

/// Faces whose three vertices are all in `vertices`, reduced to the largest
/// connected piece. Returns the submesh and the source index of each of its
/// vertices.
pub fn interface_submesh(mesh: &TriangleMesh, vertices: &[usize]) -> Result<(TriangleMesh, Vec<usize>)> {
    let mut inside = vec![false; mesh.vertex_count()];
    for &v in vertices {
        if v >= inside.len() {
            return Err(Error::IndexOutOfRange {
                face: 0,
                index: v,
                vertex_count: inside.len(),
            });
        }
        inside[v] = true;
    }
    let faces: Vec<[usize; 3]> = mesh
        .faces()
        .iter()
        .copied()
        .filter(|f| f.iter().all(|&v| inside[v]))
        .collect();
    if faces.is_empty() {
        return Err(Error::InterfaceTooSmall { size: 0, min: 1 });
    }
    let sub = TriangleMesh::new(mesh.vertices().to_vec(), faces)?;
    let (clean, _, map) = cleanup_mesh_mapped(&sub, 0.0)?;
    Ok((clean, map))
}
