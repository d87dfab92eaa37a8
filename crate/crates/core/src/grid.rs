//! Uniform hash grid for radius and nearest-neighbour queries on 3D points.

use std::collections::HashMap;

use nalgebra::Vector3;

pub struct PointGrid<'a> {
    points: &'a [Vector3<f64>],
    cell: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
    lo: [i64; 3],
    hi: [i64; 3],
}

impl<'a> PointGrid<'a> {
    pub fn new(points: &'a [Vector3<f64>], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "grid cell size must be positive");
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for (i, p) in points.iter().enumerate() {
            let key = Self::key_of(p, cell);
            for d in 0..3 {
                lo[d] = lo[d].min(key[d]);
                hi[d] = hi[d].max(key[d]);
            }
            cells.entry(key).or_default().push(i);
        }
        Self {
            points,
            cell,
            cells,
            lo,
            hi,
        }
    }

    /// Grid with a cell size matched to the mean point spacing.
    pub fn with_auto_cell(points: &'a [Vector3<f64>]) -> Self {
        let n = points.len().max(1) as f64;
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for p in points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let ext = if points.is_empty() {
            Vector3::repeat(1.0)
        } else {
            hi - lo
        };
        let diag = ext.norm().max(1e-9);
        let vol = ext.iter().map(|e| e.max(diag * 1e-3)).product::<f64>();
        let cell = (vol / n).cbrt().max(diag * 1e-6);
        Self::new(points, cell)
    }

    fn key_of(p: &Vector3<f64>, cell: f64) -> [i64; 3] {
        [
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        ]
    }

    fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// All points within `radius` of `q` as `(index, distance)`, sorted by index.
    pub fn within(&self, q: &Vector3<f64>, radius: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        if self.is_empty() {
            return out;
        }
        let a = Self::key_of(&(q - Vector3::repeat(radius)), self.cell);
        let b = Self::key_of(&(q + Vector3::repeat(radius)), self.cell);
        let (a, b) = (
            [a[0].max(self.lo[0]), a[1].max(self.lo[1]), a[2].max(self.lo[2])],
            [b[0].min(self.hi[0]), b[1].min(self.hi[1]), b[2].min(self.hi[2])],
        );
        for x in a[0]..=b[0] {
            for y in a[1]..=b[1] {
                for z in a[2]..=b[2] {
                    if let Some(ids) = self.cells.get(&[x, y, z]) {
                        for &i in ids {
                            let d = (self.points[i] - q).norm();
                            if d <= radius {
                                out.push((i, d));
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable_by_key(|&(i, _)| i);
        out
    }

    /// The `k` nearest points to `q`, ordered by distance then index.
    pub fn nearest_k(&self, q: &Vector3<f64>, k: usize) -> Vec<(usize, f64)> {
        if self.is_empty() || k == 0 {
            return Vec::new();
        }
        let k = k.min(self.points.len());
        let c = Self::key_of(q, self.cell);
        let max_ring = (0..3)
            .map(|d| (c[d] - self.lo[d]).abs().max((self.hi[d] - c[d]).abs()))
            .max()
            .unwrap_or(0);
        let mut found: Vec<(usize, f64)> = Vec::new();
        let mut ring = 0i64;
        loop {
            self.visit_shell(c, ring, |i| found.push((i, (self.points[i] - q).norm())));
            if found.len() >= k {
                found.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                if found[k - 1].1 <= ring as f64 * self.cell || ring >= max_ring {
                    break;
                }
            } else if ring >= max_ring {
                found.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                break;
            }
            ring += 1;
        }
        found.truncate(k);
        found
    }

    pub fn nearest(&self, q: &Vector3<f64>) -> Option<(usize, f64)> {
        self.nearest_k(q, 1).into_iter().next()
    }

    fn visit_shell(&self, c: [i64; 3], ring: i64, mut f: impl FnMut(usize)) {
        for x in c[0] - ring..=c[0] + ring {
            if x < self.lo[0] || x > self.hi[0] {
                continue;
            }
            for y in c[1] - ring..=c[1] + ring {
                if y < self.lo[1] || y > self.hi[1] {
                    continue;
                }
                let on_face_xy = (x - c[0]).abs() == ring || (y - c[1]).abs() == ring;
                if on_face_xy {
                    for z in c[2] - ring..=c[2] + ring {
                        if let Some(ids) = self.cells.get(&[x, y, z]) {
                            ids.iter().for_each(|&i| f(i));
                        }
                    }
                } else {
                    for z in [c[2] - ring, c[2] + ring] {
                        if let Some(ids) = self.cells.get(&[x, y, z]) {
                            ids.iter().for_each(|&i| f(i));
                        }
                        if ring == 0 {
                            break;
                        }
                    }
                }
            }
        }
    }
}
