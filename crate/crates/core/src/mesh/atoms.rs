//! Atom coordinate files: XYZ and fixed-column PDB.

use std::path::Path;

use crate::error::{Error, Result};

use super::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomFormat {
    Xyz,
    Pdb,
}

impl AtomFormat {
    pub fn from_extension(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "xyz" => Some(Self::Xyz),
            "pdb" | "ent" => Some(Self::Pdb),
            _ => None,
        }
    }
}

impl std::str::FromStr for AtomFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xyz" => Ok(Self::Xyz),
            "pdb" => Ok(Self::Pdb),
            other => Err(Error::Unsupported(format!("atom format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidueLabel {
    pub atom_name: String,
    pub residue: String,
    pub chain: char,
    pub seq: i64,
}

/// Atom positions (Å) with element symbols and optional per-atom annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSet {
    pub positions: Vec<Point>,
    pub elements: Vec<String>,
    /// Per-atom scalar descriptor such as partial charge.
    pub charges: Option<Vec<f64>>,
    pub residues: Option<Vec<ResidueLabel>>,
}

impl AtomSet {
    pub fn new(positions: Vec<Point>, elements: Vec<String>) -> Result<Self> {
        if positions.len() != elements.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} positions but {} elements",
                positions.len(),
                elements.len()
            )));
        }
        if positions.is_empty() {
            return Err(Error::EmptyAtomSet);
        }
        if elements.iter().any(|e| e.is_empty()) {
            return Err(Error::InvalidParameter("empty element symbol".into()));
        }
        Ok(Self {
            positions,
            elements,
            charges: None,
            residues: None,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn transformed(&self, rotation: &nalgebra::Matrix3<f64>, translation: &nalgebra::Vector3<f64>) -> Self {
        Self {
            positions: self.positions.iter().map(|p| rotation * p + translation).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct AtomReport {
    /// PDB rows dropped because of an alternate location other than ' ' or 'A'.
    pub skipped_altloc: usize,
}

pub fn parse_atoms(text: &str, format: AtomFormat) -> Result<(AtomSet, AtomReport)> {
    match format {
        AtomFormat::Xyz => Ok((parse_xyz(text)?, AtomReport::default())),
        AtomFormat::Pdb => parse_pdb(text),
    }
}

fn bad_field(line: usize, what: &str, tok: &str) -> Error {
    Error::Parse {
        line,
        msg: format!("malformed {what} '{tok}'"),
    }
}

fn parse_xyz(text: &str) -> Result<AtomSet> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("").trim();
    let expected: usize = header.parse().map_err(|_| bad_field(1, "atom count", header))?;
    lines.next(); // comment line
    let mut positions = Vec::new();
    let mut elements = Vec::new();
    let mut charges = Vec::new();
    for (i, l) in lines.enumerate() {
        let ln = i + 3;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() < 4 {
            return Err(Error::Parse {
                line: ln,
                msg: "expected 'element x y z'".into(),
            });
        }
        let coord = |j: usize| toks[j].parse::<f64>().map_err(|_| bad_field(ln, "coordinate", toks[j]));
        positions.push(Point::new(coord(1)?, coord(2)?, coord(3)?));
        elements.push(normalize_element(toks[0]));
        if let Some(c) = toks.get(4) {
            charges.push(c.parse::<f64>().map_err(|_| bad_field(ln, "charge", c))?);
        }
    }
    if positions.len() != expected {
        return Err(Error::CountMismatch {
            expected,
            found: positions.len(),
        });
    }
    let mut set = AtomSet::new(positions, elements)?;
    if !charges.is_empty() && charges.len() == set.len() {
        set.charges = Some(charges);
    }
    Ok(set)
}

/// 1-based inclusive column range, clipped to the line.
fn columns(line: &str, from: usize, to: usize) -> &str {
    let bytes = line.as_bytes();
    if from > bytes.len() {
        return "";
    }
    let end = to.min(bytes.len());
    std::str::from_utf8(&bytes[from - 1..end]).unwrap_or("")
}

fn parse_pdb(text: &str) -> Result<(AtomSet, AtomReport)> {
    let mut report = AtomReport::default();
    let mut positions = Vec::new();
    let mut elements = Vec::new();
    let mut residues = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let record = columns(line, 1, 6).trim_end();
        if record != "ATOM" && record != "HETATM" {
            continue;
        }
        let altloc = columns(line, 17, 17);
        if !(altloc.is_empty() || altloc == " " || altloc == "A") {
            report.skipped_altloc += 1;
            continue;
        }
        let coord = |a: usize, b: usize| {
            let field = columns(line, a, b).trim();
            field.parse::<f64>().map_err(|_| bad_field(ln, "coordinate", field))
        };
        positions.push(Point::new(coord(31, 38)?, coord(39, 46)?, coord(47, 54)?));
        let name = columns(line, 13, 16).trim().to_string();
        let mut element = columns(line, 77, 78).trim().to_string();
        if element.is_empty() {
            element = name
                .chars()
                .find(|c| c.is_ascii_alphabetic())
                .map(String::from)
                .unwrap_or_default();
        }
        if element.is_empty() {
            return Err(bad_field(ln, "element", ""));
        }
        elements.push(normalize_element(&element));
        residues.push(ResidueLabel {
            atom_name: name,
            residue: columns(line, 18, 20).trim().to_string(),
            chain: columns(line, 22, 22).chars().next().unwrap_or(' '),
            seq: columns(line, 23, 26).trim().parse().unwrap_or(0),
        });
    }
    let mut set = AtomSet::new(positions, elements)?;
    set.residues = Some(residues);
    Ok((set, report))
}

/// "CL" / "cl" → "Cl".
fn normalize_element(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_ascii_uppercase().to_string() + &chars.as_str().to_ascii_lowercase(),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xyz_single_carbon() {
        let (a, _) = parse_atoms("1\n\nC 0.0 0.0 0.0", AtomFormat::Xyz).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a.elements[0], "C");
        assert_eq!(a.positions[0], Point::zeros());
    }

    #[test]
    fn xyz_count_mismatch() {
        let text = "3\nwater?\nO 0 0 0\nH 1 0 0\n";
        assert!(matches!(
            parse_atoms(text, AtomFormat::Xyz),
            Err(Error::CountMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn xyz_charges_and_bad_coordinate() {
        let (a, _) = parse_atoms("2\nc\nO 0 0 0 -0.8\nH 1 0 0 0.4\n", AtomFormat::Xyz).unwrap();
        assert_eq!(a.charges, Some(vec![-0.8, 0.4]));
        assert!(matches!(
            parse_atoms("1\n\nC 0.0 x 0.0", AtomFormat::Xyz),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn pdb_fixed_columns() {
        let line = "ATOM      1  N   ALA A   1      11.104   6.134  -6.504  1.00  0.00           N";
        let text = format!("HEADER    TEST\n{line}\nTER\nEND\n");
        let (a, rep) = parse_atoms(&text, AtomFormat::Pdb).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a.elements[0], "N");
        assert_eq!(a.positions[0], Point::new(11.104, 6.134, -6.504));
        let res = &a.residues.as_ref().unwrap()[0];
        assert_eq!(res.residue, "ALA");
        assert_eq!(res.chain, 'A');
        assert_eq!(res.seq, 1);
        assert_eq!(res.atom_name, "N");
        assert_eq!(rep.skipped_altloc, 0);
    }

    #[test]
    fn pdb_altloc_skipped_and_empty() {
        let a = "ATOM      2  CA AALA A   1      11.639   6.071  -5.147  0.50  0.00           C";
        let b = "ATOM      3  CA BALA A   1      11.500   6.000  -5.000  0.50  0.00           C";
        let (set, rep) = parse_atoms(&format!("{a}\n{b}\n"), AtomFormat::Pdb).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(rep.skipped_altloc, 1);
        assert!(matches!(
            parse_atoms("REMARK nothing\n", AtomFormat::Pdb),
            Err(Error::EmptyAtomSet)
        ));
    }

    #[test]
    fn pdb_malformed_coordinate() {
        let line = "ATOM      1  N   ALA A   1      11.1x4   6.134  -6.504  1.00  0.00           N";
        assert!(matches!(
            parse_atoms(line, AtomFormat::Pdb),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
