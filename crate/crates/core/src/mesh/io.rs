//! OFF, OBJ and ASCII PLY readers plus OFF/OBJ writers.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::{Point, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_extension(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "off" => Some(Self::Off),
            "obj" => Some(Self::Obj),
            "ply" => Some(Self::Ply),
            _ => None,
        }
    }
}

impl std::str::FromStr for MeshFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "off" => Ok(Self::Off),
            "obj" => Ok(Self::Obj),
            "ply" => Ok(Self::Ply),
            other => Err(Error::Unsupported(format!("mesh format '{other}'"))),
        }
    }
}

/// Side information from parsing.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct LoadReport {
    /// Polygons with more than three corners that were split into triangle fans.
    pub fan_triangulated: usize,
}

pub fn load_mesh(text: &str, format: MeshFormat) -> Result<(TriangleMesh, LoadReport)> {
    let (vertices, polys, origin) = match format {
        MeshFormat::Off => parse_off(text)?,
        MeshFormat::Obj => parse_obj(text)?,
        MeshFormat::Ply => parse_ply(text)?,
    };
    let mut report = LoadReport::default();
    let mut faces = Vec::with_capacity(polys.len());
    for (poly, line) in polys.iter().zip(origin) {
        if poly.len() < 3 {
            return Err(Error::Parse {
                line,
                msg: format!("face with {} vertices", poly.len()),
            });
        }
        if let Some(&bad) = poly.iter().find(|&&v| v >= vertices.len()) {
            return Err(Error::IndexOutOfRange {
                face: faces.len(),
                index: bad,
                vertex_count: vertices.len(),
            });
        }
        if poly.len() > 3 {
            report.fan_triangulated += 1;
        }
        for i in 1..poly.len() - 1 {
            faces.push([poly[0], poly[i], poly[i + 1]]);
        }
    }
    Ok((TriangleMesh::new(vertices, faces)?, report))
}

/// Reads a mesh file, taking the format from `format` or the file extension.
pub fn load_mesh_path(path: &Path, format: Option<MeshFormat>) -> Result<(TriangleMesh, LoadReport)> {
    let format = format
        .or_else(|| MeshFormat::from_extension(path))
        .ok_or_else(|| Error::Unsupported(format!("cannot infer mesh format of {}", path.display())))?;
    let bytes = std::fs::read(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::Unsupported("binary mesh data".into()))?;
    load_mesh(&text, format)
}

type Parsed = (Vec<Point>, Vec<Vec<usize>>, Vec<usize>);

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        msg: "missing number".into(),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid number '{tok}'"),
    })
}

fn parse_usize(tok: Option<&str>, line: usize) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        msg: "missing integer".into(),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid integer '{tok}'"),
    })
}

/// Non-empty lines with comments stripped, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_off(text: &str) -> Result<Parsed> {
    let mut lines = content_lines(text);
    let (ln, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty OFF file".into(),
    })?;
    let mut toks = first.split_whitespace();
    if toks.next() != Some("OFF") {
        return Err(Error::Parse {
            line: ln,
            msg: "missing OFF header".into(),
        });
    }
    let rest: Vec<&str> = toks.collect();
    let (ln, counts) = if rest.is_empty() {
        let (ln, l) = lines.next().ok_or(Error::Parse {
            line: ln,
            msg: "missing counts line".into(),
        })?;
        (ln, l.split_whitespace().collect::<Vec<_>>())
    } else {
        (ln, rest)
    };
    let nv = parse_usize(counts.first().copied(), ln)?;
    let nf = parse_usize(counts.get(1).copied(), ln)?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or(Error::Parse {
            line: ln,
            msg: "unexpected end of vertex list".into(),
        })?;
        let mut t = l.split_whitespace();
        vertices.push(Point::new(
            parse_f64(t.next(), ln)?,
            parse_f64(t.next(), ln)?,
            parse_f64(t.next(), ln)?,
        ));
    }
    let mut polys = Vec::with_capacity(nf);
    let mut origin = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or(Error::Parse {
            line: ln,
            msg: "unexpected end of face list".into(),
        })?;
        let mut t = l.split_whitespace();
        let n = parse_usize(t.next(), ln)?;
        let poly = (0..n).map(|_| parse_usize(t.next(), ln)).collect::<Result<Vec<_>>>()?;
        polys.push(poly);
        origin.push(ln);
    }
    Ok((vertices, polys, origin))
}

fn parse_obj(text: &str) -> Result<Parsed> {
    let mut vertices = Vec::new();
    let mut polys = Vec::new();
    let mut origin = Vec::new();
    for (ln, l) in content_lines(text) {
        let mut t = l.split_whitespace();
        match t.next() {
            Some("v") => vertices.push(Point::new(
                parse_f64(t.next(), ln)?,
                parse_f64(t.next(), ln)?,
                parse_f64(t.next(), ln)?,
            )),
            Some("f") => {
                let mut poly = Vec::new();
                for tok in t {
                    let idx = tok.split('/').next().unwrap_or("");
                    let i: i64 = idx.parse().map_err(|_| Error::Parse {
                        line: ln,
                        msg: format!("invalid face index '{tok}'"),
                    })?;
                    let resolved = match i {
                        0 => {
                            return Err(Error::Parse {
                                line: ln,
                                msg: "OBJ indices are 1-based".into(),
                            })
                        }
                        i if i > 0 => (i - 1) as usize,
                        i => {
                            let r = vertices.len() as i64 + i;
                            if r < 0 {
                                return Err(Error::Parse {
                                    line: ln,
                                    msg: format!("relative index {i} before first vertex"),
                                });
                            }
                            r as usize
                        }
                    };
                    poly.push(resolved);
                }
                polys.push(poly);
                origin.push(ln);
            }
            _ => {}
        }
    }
    Ok((vertices, polys, origin))
}

struct PlyElement {
    name: String,
    count: usize,
    props: Vec<String>,
    /// index of the list property, if any
    list_prop: Option<usize>,
}

fn parse_ply(text: &str) -> Result<Parsed> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "missing 'ply' magic".into(),
            })
        }
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut last = 1;
    loop {
        let (ln, l) = lines.next().ok_or(Error::Parse {
            line: last,
            msg: "unterminated PLY header".into(),
        })?;
        last = ln;
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks.as_slice() {
            ["end_header"] => break,
            ["format", fmt, ..] => {
                if *fmt != "ascii" {
                    return Err(Error::Unsupported(format!(
                        "PLY format '{fmt}' (only ascii is supported)"
                    )));
                }
            }
            ["element", name, count] => elements.push(PlyElement {
                name: name.to_string(),
                count: parse_usize(Some(count), ln)?,
                props: Vec::new(),
                list_prop: None,
            }),
            ["property", "list", _, _, name] => {
                let el = elements.last_mut().ok_or(Error::Parse {
                    line: ln,
                    msg: "property before element".into(),
                })?;
                el.list_prop = Some(el.props.len());
                el.props.push(name.to_string());
            }
            ["property", _, name] => {
                let el = elements.last_mut().ok_or(Error::Parse {
                    line: ln,
                    msg: "property before element".into(),
                })?;
                el.props.push(name.to_string());
            }
            _ => {}
        }
    }
    let mut vertices = Vec::new();
    let mut polys = Vec::new();
    let mut origin = Vec::new();
    let mut data = lines.filter(|(_, l)| !l.is_empty());
    for el in &elements {
        for _ in 0..el.count {
            let (ln, l) = data.next().ok_or(Error::Parse {
                line: last,
                msg: format!("unexpected end of '{}' data", el.name),
            })?;
            last = ln;
            let toks: Vec<&str> = l.split_whitespace().collect();
            match el.name.as_str() {
                "vertex" => {
                    let pos = |axis: &str| -> Result<f64> {
                        let i = el.props.iter().position(|p| p == axis).ok_or(Error::Parse {
                            line: ln,
                            msg: format!("vertex element lacks property '{axis}'"),
                        })?;
                        parse_f64(toks.get(i).copied(), ln)
                    };
                    vertices.push(Point::new(pos("x")?, pos("y")?, pos("z")?));
                }
                "face" => {
                    // assumes the vertex index list is the first property
                    if el.list_prop != Some(0) {
                        return Err(Error::Unsupported("PLY face element without leading index list".into()));
                    }
                    let n = parse_usize(toks.first().copied(), ln)?;
                    let poly = (0..n)
                        .map(|i| parse_usize(toks.get(1 + i).copied(), ln))
                        .collect::<Result<Vec<_>>>()?;
                    polys.push(poly);
                    origin.push(ln);
                }
                _ => {}
            }
        }
    }
    Ok((vertices, polys, origin))
}

/// Coordinates use the shortest representation that parses back to the same `f64`.
pub fn write_off(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OFF");
    let _ = writeln!(s, "{} {} 0", mesh.vertex_count(), mesh.face_count());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?} {:?}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn write_obj(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for p in mesh.vertices() {
        let _ = writeln!(s, "v {:?} {:?} {:?}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TETRA_OFF: &str =
        "OFF\n# regular tetrahedron\n4 4 6\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n";

    #[test]
    fn off_tetrahedron() {
        let (m, rep) = load_mesh(TETRA_OFF, MeshFormat::Off).unwrap();
        assert_eq!((m.vertex_count(), m.face_count(), m.edge_count()), (4, 4, 6));
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(rep.fan_triangulated, 0);
    }

    #[test]
    fn obj_single_face() {
        let (m, _) = load_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n", MeshFormat::Obj).unwrap();
        assert_eq!(m.face_count(), 1);
    }

    #[test]
    fn obj_slashes_and_quads() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nf 1/1/1 2/2/2 3/3/3 4/4/4\nf -4 -3 -1\n";
        let (m, rep) = load_mesh(text, MeshFormat::Obj).unwrap();
        assert_eq!(m.face_count(), 3);
        assert_eq!(rep.fan_triangulated, 1);
        assert_eq!(m.faces()[2], [0, 1, 3]);
    }

    #[test]
    fn off_index_out_of_range() {
        let text = "OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 7\n";
        assert!(matches!(
            load_mesh(text, MeshFormat::Off),
            Err(Error::IndexOutOfRange { index: 7, .. })
        ));
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "OFF\n3 1 0\n0 0 0\n1 zero 0\n0 1 0\n3 0 1 2\n";
        match load_mesh(text, MeshFormat::Off) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ascii_ply() {
        let text = "ply\nformat ascii 1.0\ncomment x\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nproperty float nx\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0 9\n1 0 0 9\n1 1 0 9\n0 1 0 9\n4 0 1 2 3\n";
        let (m, rep) = load_mesh(text, MeshFormat::Ply).unwrap();
        assert_eq!(m.face_count(), 2);
        assert_eq!(rep.fan_triangulated, 1);
        assert_eq!(m.vertices()[2], Point::new(1.0, 1.0, 0.0));
    }

    #[test]
    fn binary_ply_rejected() {
        let text = "ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n";
        assert!(matches!(load_mesh(text, MeshFormat::Ply), Err(Error::Unsupported(_))));
    }

    proptest! {
        #[test]
        fn serialize_round_trip(
            coords in proptest::collection::vec((-1e4f64..1e4, -1e-3f64..1e7, -1e4f64..1e4), 3..40),
            seed in 0usize..1000,
        ) {
            let n = coords.len();
            let vertices: Vec<Point> = coords.iter().map(|&(x, y, z)| Point::new(x, y, z)).collect();
            let faces: Vec<[usize; 3]> = (0..n - 2).map(|i| {
                let a = (i + seed) % n;
                [a, (a + 1) % n, (a + 2) % n]
            }).collect();
            let m = TriangleMesh::new(vertices, faces).unwrap();
            let (off, _) = load_mesh(&write_off(&m), MeshFormat::Off).unwrap();
            let (obj, _) = load_mesh(&write_obj(&m), MeshFormat::Obj).unwrap();
            prop_assert!(off == m);
            prop_assert!(obj == m);
        }
    }
}
