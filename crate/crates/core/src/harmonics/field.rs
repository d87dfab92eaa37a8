use std::fmt::Write as _;
use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh::{Point, TriangleMesh};
use crate::numfmt::sig9;
use crate::sparse::SparseSymMatrix;

pub const FIELD_MAGIC: &[u8; 8] = b"SHFIELD1";

/// Per-vertex values: an `N × n` matrix with one named column per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceField {
    pub values: DMatrix<f64>,
    pub names: Vec<String>,
    /// Content hash of the mesh the values live on, when known.
    pub mesh_hash: Option<String>,
}

impl SurfaceField {
    pub fn new(values: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        if names.len() != values.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} channel names for {} columns",
                names.len(),
                values.ncols()
            )));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at vertex {} channel {}",
                i % values.nrows().max(1),
                i / values.nrows().max(1)
            )));
        }
        Ok(Self {
            values,
            names,
            mesh_hash: None,
        })
    }

    pub fn scalar(name: &str, values: &[f64]) -> Result<Self> {
        Self::new(
            DMatrix::from_column_slice(values.len(), 1, values),
            vec![name.to_string()],
        )
    }

    pub fn from_points(points: &[Point], mesh: &TriangleMesh) -> Self {
        let values = DMatrix::from_fn(points.len(), 3, |i, j| points[i][j]);
        Self {
            values,
            names: vec!["x".into(), "y".into(), "z".into()],
            mesh_hash: Some(mesh.content_hash()),
        }
    }

    pub fn on_mesh(mut self, mesh: &TriangleMesh) -> Self {
        self.mesh_hash = Some(mesh.content_hash());
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.values.nrows()
    }

    pub fn channel_count(&self) -> usize {
        self.values.ncols()
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.values.column(c).iter().copied().collect()
    }

    /// Rows `idx` of every channel.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let values = DMatrix::from_fn(idx.len(), self.channel_count(), |i, j| self.values[(idx[i], j)]);
        Self {
            values,
            names: self.names.clone(),
            mesh_hash: None,
        }
    }

    /// `1ᵀ B f / 1ᵀ B 1` per channel.
    pub fn weighted_means(&self, mass: &SparseSymMatrix) -> Vec<f64> {
        let ones = DVector::from_element(mass.dim(), 1.0);
        let w = mass.mul_vec(&ones);
        let total = w.sum();
        self.values.column_iter().map(|c| c.dot(&w) / total).collect()
    }

    /// `fᵀ B f` per channel.
    pub fn b_norms_squared(&self, mass: &SparseSymMatrix) -> Vec<f64> {
        let bf = mass.mul_dense(&self.values);
        self.values
            .column_iter()
            .zip(bf.column_iter())
            .map(|(a, b)| a.dot(&b))
            .collect()
    }
}

/// CSV with a `vertex,<names...>` header and 9 significant digits.
pub fn write_field_csv(field: &SurfaceField) -> String {
    let mut s = String::from("vertex");
    for n in &field.names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for i in 0..field.vertex_count() {
        let _ = write!(s, "{i}");
        for j in 0..field.channel_count() {
            s.push(',');
            s.push_str(&sig9(field.values[(i, j)]));
        }
        s.push('\n');
    }
    s
}

pub fn read_field_csv(text: &str) -> Result<SurfaceField> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty field CSV".into(),
    })?;
    let mut cols = header.split(',').map(|c| c.trim().to_string());
    let first = cols.next();
    let names: Vec<String> = cols.collect();
    if first.as_deref() != Some("vertex") {
        return Err(Error::Parse {
            line: 1,
            msg: "field CSV must start with a 'vertex' column".into(),
        });
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, l) in lines {
        let ln = i + 1;
        let toks: Vec<&str> = l.split(',').map(str::trim).collect();
        if toks.len() != names.len() + 1 {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected {} columns, found {}", names.len() + 1, toks.len()),
            });
        }
        let idx: usize = toks[0].parse().map_err(|_| Error::Parse {
            line: ln,
            msg: format!("invalid vertex index '{}'", toks[0]),
        })?;
        if idx != rows {
            return Err(Error::Parse {
                line: ln,
                msg: format!("vertex index {idx} out of sequence (expected {rows})"),
            });
        }
        for t in &toks[1..] {
            data.push(t.parse::<f64>().map_err(|_| Error::Parse {
                line: ln,
                msg: format!("invalid number '{t}'"),
            })?);
        }
        rows += 1;
    }
    let values = DMatrix::from_row_slice(rows, names.len(), &data);
    SurfaceField::new(values, names)
}

/// Binary layout (little-endian): magic `SHFIELD1`, `u64` N, `u64` n, then
/// per channel a `u32` name length and UTF-8 bytes, then N·n `f64`
/// column-major.
pub fn write_field<W: Write>(field: &SurfaceField, mut w: W) -> Result<()> {
    w.write_all(FIELD_MAGIC)?;
    w.write_u64::<LittleEndian>(field.vertex_count() as u64)?;
    w.write_u64::<LittleEndian>(field.channel_count() as u64)?;
    for n in &field.names {
        w.write_u32::<LittleEndian>(n.len() as u32)?;
        w.write_all(n.as_bytes())?;
    }
    for &x in field.values.as_slice() {
        w.write_f64::<LittleEndian>(x)?;
    }
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<SurfaceField> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != FIELD_MAGIC {
        return Err(Error::Parse {
            line: 0,
            msg: "not a field container".into(),
        });
    }
    let n = r.read_u64::<LittleEndian>()? as usize;
    let c = r.read_u64::<LittleEndian>()? as usize;
    if n > 1 << 32 || c > 1 << 20 {
        return Err(Error::Parse {
            line: 0,
            msg: "implausible field dimensions".into(),
        });
    }
    let mut names = Vec::with_capacity(c);
    for _ in 0..c {
        let len = r.read_u32::<LittleEndian>()? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        names.push(String::from_utf8(buf).map_err(|_| Error::Parse {
            line: 0,
            msg: "channel name is not UTF-8".into(),
        })?);
    }
    let mut data = vec![0.0; n * c];
    r.read_f64_into::<LittleEndian>(&mut data)?;
    SurfaceField::new(DMatrix::from_vec(n, c, data), names)
}
