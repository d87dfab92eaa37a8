//! Deterministic synthetic surfaces for tests and demonstrations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{icosphere, Point, TriangleMesh};

/// Icosphere with every vertex radius scaled by `1 + amplitude·u`, `u`
/// uniform in `[−1, 1]` from `seed`. Breaks the icosahedral symmetry.
pub fn bumped_icosphere(subdivisions: u32, radius: f64, amplitude: f64, seed: u64) -> Result<TriangleMesh> {
    if !(0.0..1.0).contains(&amplitude) {
        return Err(Error::InvalidParameter(format!(
            "bump amplitude must be in [0, 1), got {amplitude}"
        )));
    }
    let m = icosphere(subdivisions, radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = m
        .vertices()
        .iter()
        .map(|p| p * (1.0 + amplitude * rng.gen_range(-1.0..=1.0)))
        .collect();
    m.with_vertices(v)
}

/// Square `size × size` patch at height `z`, `n × n` vertices, split along
/// alternating diagonals. Faces face `+z`, or `−z` when `facing_down`.
pub fn grid_patch(n: usize, size: f64, z: f64, facing_down: bool) -> Result<TriangleMesh> {
    if n < 2 || !(size > 0.0) {
        return Err(Error::InvalidParameter("grid patch needs n >= 2 and size > 0".into()));
    }
    let h = size / (n - 1) as f64;
    let vertices = (0..n * n)
        .map(|k| Point::new((k % n) as f64 * h, (k / n) as f64 * h, z))
        .collect();
    let mut faces = Vec::with_capacity(2 * (n - 1) * (n - 1));
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let (a, b, c, d) = (j * n + i, j * n + i + 1, (j + 1) * n + i + 1, (j + 1) * n + i);
            let tris = if (i + j) % 2 == 0 {
                [[a, b, c], [a, c, d]]
            } else {
                [[a, b, d], [b, c, d]]
            };
            for t in tris {
                faces.push(if facing_down { [t[0], t[2], t[1]] } else { t });
            }
        }
    }
    TriangleMesh::new(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::surface_area;

    #[test]
    fn patch_orientation_and_area() {
        let up = grid_patch(5, 2.0, 1.0, false).unwrap();
        assert_eq!((up.vertex_count(), up.face_count()), (25, 32));
        assert!((surface_area(&up) - 4.0).abs() < 1e-12);
        let [a, b, c] = up.corners(0);
        assert!((b - a).cross(&(c - a)).z > 0.0);
        let down = grid_patch(5, 2.0, 1.0, true).unwrap();
        let [a, b, c] = down.corners(0);
        assert!((b - a).cross(&(c - a)).z < 0.0);
    }

    #[test]
    fn bumps_are_seeded() {
        let a = bumped_icosphere(1, 2.0, 0.1, 7).unwrap();
        assert_eq!(a, bumped_icosphere(1, 2.0, 0.1, 7).unwrap());
        assert_ne!(a, bumped_icosphere(1, 2.0, 0.1, 8).unwrap());
        assert!(a.vertices().iter().all(|p| (p.norm() - 2.0).abs() <= 0.2 + 1e-12));
    }
}
