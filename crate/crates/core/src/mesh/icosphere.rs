use std::collections::HashMap;

use crate::error::{Error, Result};

use super::{Point, TriangleMesh};

const MAX_SUBDIVISIONS: u32 = 7;

/// Regular icosahedron refined by midpoint subdivision, every vertex projected
/// onto the sphere of the given radius. Faces wind counter-clockwise seen from
/// outside. `V = 10·4^s + 2`.
pub fn icosphere(subdivisions: u32, radius: f64) -> Result<TriangleMesh> {
    if subdivisions > MAX_SUBDIVISIONS {
        return Err(Error::InvalidParameter(format!(
            "subdivisions must be at most {MAX_SUBDIVISIONS}, got {subdivisions}"
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Point> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Point>| -> usize {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    for v in &mut verts {
        *v *= radius;
    }
    Ok(TriangleMesh::new_unchecked(verts, faces))
}

#[cfg(test)]
mod tests {
    use super::super::surface_area;
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn counts_follow_subdivision_formula() {
        let s0 = icosphere(0, 1.0).unwrap();
        assert_eq!((s0.vertex_count(), s0.face_count()), (12, 20));
        let s3 = icosphere(3, 1.0).unwrap();
        assert_eq!((s3.vertex_count(), s3.face_count()), (642, 1280));
        for s in 0..5 {
            let m = icosphere(s, 1.0).unwrap();
            assert_eq!(m.vertex_count(), 10 * 4usize.pow(s) + 2);
            assert_eq!(m.euler_characteristic(), 2);
            assert!(m.is_closed());
            m.validate().unwrap();
        }
        assert!(icosphere(8, 1.0).is_err());
    }

    #[test]
    fn area_converges_to_sphere() {
        let a = surface_area(&icosphere(2, 2.0).unwrap());
        assert!((a / (16.0 * PI) - 1.0).abs() < 0.02);
        let a = surface_area(&icosphere(4, 1.0).unwrap());
        assert!((a / (4.0 * PI) - 1.0).abs() < 0.01);
    }

    #[test]
    fn vertices_on_sphere_and_faces_outward() {
        let m = icosphere(3, 2.5).unwrap();
        for p in m.vertices() {
            assert!((p.norm() / 2.5 - 1.0).abs() < 1e-12);
        }
        for f in 0..m.face_count() {
            let [a, b, c] = m.corners(f);
            let n = (b - a).cross(&(c - a));
            assert!(n.dot(&(a + b + c)) > 0.0);
        }
    }
}
