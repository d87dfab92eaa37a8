use std::fmt::Write as _;

use nalgebra::{Matrix3, Matrix4, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PointGrid;
use crate::mesh::Point;

/// Proper rigid motion `x ↦ R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let orth = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if !(orth <= 1e-10 && (rotation.determinant() - 1.0).abs() <= 1e-10)
            || !translation.iter().all(|x| x.is_finite())
        {
            return Err(Error::InvalidParameter("not a proper rigid transform".into()));
        }
        Ok(Self { rotation, translation })
    }

    pub fn apply(&self, p: &Point) -> Point {
        self.rotation * p + self.translation
    }

    pub fn apply_all(&self, points: &[Point]) -> Vec<Point> {
        points.iter().map(|p| self.apply(p)).collect()
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Rotation angle in radians.
    pub fn angle(&self) -> f64 {
        ((self.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Four whitespace-separated rows of the homogeneous matrix, shortest
    /// round-trip float formatting.
    pub fn to_text(&self) -> String {
        let m = self.to_homogeneous();
        let mut s = String::new();
        for i in 0..4 {
            let row: Vec<String> = (0..4).map(|j| format!("{:?}", m[(i, j)])).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let vals: Vec<f64> = text
            .split_whitespace()
            .map(|t| {
                t.parse().map_err(|_| Error::Parse {
                    line: 0,
                    msg: format!("invalid number '{t}' in transform"),
                })
            })
            .collect::<Result<_>>()?;
        if vals.len() != 16 {
            return Err(Error::Parse {
                line: 0,
                msg: format!("transform needs 16 numbers, found {}", vals.len()),
            });
        }
        let m = Matrix4::from_row_slice(&vals);
        Self::new(m.fixed_view::<3, 3>(0, 0).into(), m.fixed_view::<3, 1>(0, 3).into())
    }

    /// Row-major rotation and translation for JSON reports.
    pub fn to_serde(&self) -> TransformJson {
        TransformJson {
            rotation: std::array::from_fn(|i| std::array::from_fn(|j| self.rotation[(i, j)])),
            translation: [self.translation.x, self.translation.y, self.translation.z],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformJson {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl From<Rotation3<f64>> for RigidTransform {
    fn from(r: Rotation3<f64>) -> Self {
        Self {
            rotation: r.into_inner(),
            translation: Vector3::zeros(),
        }
    }
}

/// Weighted least-squares rigid motion taking `p` onto `q`.
pub fn kabsch(p: &[Point], q: &[Point], weights: Option<&[f64]>) -> Result<RigidTransform> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} points, found {}",
            p.len(),
            q.len()
        )));
    }
    if p.len() < 3 {
        return Err(Error::Degenerate(format!(
            "kabsch needs at least 3 points, got {}",
            p.len()
        )));
    }
    let w: Vec<f64> = match weights {
        Some(w) if w.len() != p.len() => {
            return Err(Error::DimensionMismatch(format!(
                "{} points but {} weights",
                p.len(),
                w.len()
            )))
        }
        Some(w) if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) => {
            return Err(Error::InvalidParameter("kabsch weights must be finite and >= 0".into()))
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; p.len()],
    };
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("kabsch weights sum to zero".into()));
    }
    let pc = p.iter().zip(&w).map(|(x, wi)| x * *wi).sum::<Vector3<f64>>() / total;
    let qc = q.iter().zip(&w).map(|(x, wi)| x * *wi).sum::<Vector3<f64>>() / total;
    let mut h = Matrix3::zeros();
    for ((a, b), wi) in p.iter().zip(q).zip(&w) {
        h += (a - pc) * (b - qc).transpose() * *wi;
    }
    let svd = h.svd(true, true);
    let mut s = svd.singular_values;
    let mut u = svd.u.expect("requested U");
    let mut vt = svd.v_t.expect("requested Vᵀ");
    // sort singular values descending so the smallest is last
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    u = Matrix3::from_columns(&[u.column(order[0]), u.column(order[1]), u.column(order[2])]);
    vt = Matrix3::from_rows(&[vt.row(order[0]), vt.row(order[1]), vt.row(order[2])]);
    s = Vector3::new(s[order[0]], s[order[1]], s[order[2]]);
    if !(s[0] > 0.0) || s[1] <= 1e-12 * s[0] {
        return Err(Error::Degenerate(
            "point configuration is collinear or coincident".into(),
        ));
    }
    let v = vt.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let r = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    Ok(RigidTransform {
        rotation: r,
        translation: qc - r * pc,
    })
}

fn squared_distance_sum(a: &[Point], b: &[Point]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).sum()
}

/// `√(‖Z* − Z‖²_F / (n+m))` after Kabsch-superimposing `z` onto `z_star`.
pub fn complex_rmsd(z_star: &[Point], z: &[Point]) -> Result<f64> {
    if z_star.len() != z.len() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} points, found {}",
            z_star.len(),
            z.len()
        )));
    }
    let t = kabsch(z, z_star, None)?;
    let moved = t.apply_all(z);
    Ok((squared_distance_sum(z_star, &moved) / z.len() as f64).sqrt())
}

/// Indices of points in either part of `z_star` (split at `split`) lying
/// within `threshold` of the other part.
pub fn interface_indices(z_star: &[Point], split: usize, threshold: f64) -> Vec<usize> {
    let (a, b) = z_star.split_at(split.min(z_star.len()));
    let mut out = Vec::new();
    if a.is_empty() || b.is_empty() {
        return out;
    }
    let ga = PointGrid::new(a, threshold);
    let gb = PointGrid::new(b, threshold);
    out.extend((0..a.len()).filter(|&i| !gb.within(&a[i], threshold).is_empty()));
    out.extend(
        (0..b.len())
            .filter(|&i| !ga.within(&b[i], threshold).is_empty())
            .map(|i| i + split),
    );
    out
}

/// [`complex_rmsd`] restricted to the interface of the reference complex:
/// points of the first `split` rows within `threshold` of the remaining rows,
/// and vice versa.
pub fn interface_rmsd(z_star: &[Point], z: &[Point], split: usize, threshold: f64) -> Result<f64> {
    if z_star.len() != z.len() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} points, found {}",
            z_star.len(),
            z.len()
        )));
    }
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "interface threshold must be > 0, got {threshold}"
        )));
    }
    let idx = interface_indices(z_star, split, threshold);
    if idx.is_empty() {
        return Err(Error::EmptyInterface { threshold });
    }
    let a: Vec<Point> = idx.iter().map(|&i| z_star[i]).collect();
    let b: Vec<Point> = idx.iter().map(|&i| z[i]).collect();
    complex_rmsd(&a, &b)
}
