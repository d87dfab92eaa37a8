use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde_json::Value;
use surfharm::correspondence::{
    complex_rmsd, extract_interface, interface_indices, interface_rmsd, rigid_dock, DockOptions, Interface,
    DEFAULT_INTERFACE_THRESHOLD, DEFAULT_RIDGE_SCALE, DEFAULT_RMSD_INTERFACE_THRESHOLD, MIN_INTERFACE_VERTICES,
};
use surfharm::features::{assemble_input_features, project_atom_features};
use surfharm::harmonics::{default_hks_times, heat_kernel_signature};
use surfharm::mesh::write_off;
use surfharm::{Error, SpectralBasis, SurfaceField, TriangleMesh};

use super::fields::FeatureArgs;
use crate::common::{
    load_input_mesh, read_text, write_file, CliError, CliResult, MeshInput, Report, SpectrumArgs, DEFAULT_REQUEST,
};
use crate::config::Config;

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterfaceMode {
    /// Vertices within `--threshold` of the partner (inputs in a common frame).
    Extract,
    /// Every vertex.
    All,
}

/// Rigid docking of a ligand surface onto a receptor surface.
#[derive(Args, Debug)]
pub struct DockCmd {
    #[arg(long)]
    pub ligand: String,
    #[arg(long)]
    pub receptor: String,
    /// Ligand atoms; adds projected chemical channels (needs `--receptor-atoms`).
    #[arg(long, requires = "receptor_atoms")]
    pub ligand_atoms: Option<String>,
    #[arg(long, requires = "ligand_atoms")]
    pub receptor_atoms: Option<String>,
    /// How interface vertices are chosen when no masks are given.
    #[arg(long, value_enum)]
    pub interface: Option<InterfaceMode>,
    /// Ligand interface vertex indices (whitespace or comma separated).
    #[arg(long, requires = "receptor_mask")]
    pub ligand_mask: Option<String>,
    #[arg(long, requires = "ligand_mask")]
    pub receptor_mask: Option<String>,
    /// Interface extraction distance in Å (default 3).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Ligand mesh in its true pose, vertex-aligned with `--ligand`; enables RMSD metrics.
    #[arg(long)]
    pub truth_ligand: Option<String>,
    /// Interface distance for interface RMSD in Å (default 8).
    #[arg(long)]
    pub rmsd_threshold: Option<f64>,
    /// Functional map Laplacian regularization weight (default 1).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Target distance of matched ligand points along the receptor normal (default 0).
    #[arg(long)]
    pub contact_offset: Option<f64>,
    /// Number of HKS descriptor channels (default 16).
    #[arg(long)]
    pub hks_count: Option<usize>,
    /// Minimum interface submesh size (default 10).
    #[arg(long)]
    pub min_interface: Option<usize>,
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub spectrum: SpectrumArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[command(flatten)]
    pub mesh_input: MeshInput,
}

fn read_mask(path: &str, n: usize) -> CliResult<Vec<usize>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            let v: usize = tok.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("bad vertex index '{tok}' in {path}"),
            })?;
            if v >= n {
                return Err(Error::IndexOutOfRange {
                    face: 0,
                    index: v,
                    vertex_count: n,
                }
                .into());
            }
            out.push(v);
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

struct Stages {
    report: Report,
    out: PathBuf,
}

impl Stages {
    /// Runs one stage; on failure the partial report is flushed with `failed_at`.
    fn run<T>(&mut self, name: &str, f: impl FnOnce(&mut Report) -> CliResult<T>) -> CliResult<T> {
        let start = Instant::now();
        match f(&mut self.report) {
            Ok(v) => {
                self.report.time(&format!("{name}_s"), start.elapsed().as_secs_f64());
                Ok(v)
            }
            Err(e) => {
                let mut r = std::mem::replace(&mut self.report, Report::new());
                r.set("failed_at", name);
                r.set(
                    "error",
                    serde_json::json!({ "category": e.category, "message": e.message }),
                );
                r.write(&self.out.join("report.json"))?;
                Err(e)
            }
        }
    }
}

fn hks_field(mesh: &TriangleMesh, basis: &SpectralBasis, times: &[f64]) -> CliResult<SurfaceField> {
    Ok(heat_kernel_signature(basis, times, true)?.on_mesh(mesh))
}

pub fn run(cmd: &DockCmd, cfg: &Config) -> CliResult<()> {
    let start = Instant::now();
    let mut st = Stages {
        report: Report::new(),
        out: cmd.out.clone(),
    };
    let request = cmd.spectrum.request(cfg, DEFAULT_REQUEST)?;
    let solver = cmd.spectrum.solver(cfg)?;
    let opts = DockOptions {
        spectrum: request,
        solver: solver.clone(),
        alpha: cfg.pick_or(cmd.alpha, "alpha", 1.0)?,
        ridge_scale: DEFAULT_RIDGE_SCALE,
        min_interface: cfg.pick_or(cmd.min_interface, "min_interface", MIN_INTERFACE_VERTICES)?,
        contact_offset: cfg.pick_or(cmd.contact_offset, "contact_offset", 0.0)?,
    };
    let threshold = cfg.pick_or(cmd.threshold, "threshold", DEFAULT_INTERFACE_THRESHOLD)?;
    let rmsd_threshold = cfg.pick_or(cmd.rmsd_threshold, "rmsd_threshold", DEFAULT_RMSD_INTERFACE_THRESHOLD)?;
    let hks_count = cfg.pick_or(cmd.hks_count, "hks_count", 16)?;
    let mode = match cfg.pick::<String>(None, "interface")? {
        _ if cmd.interface.is_some() => cmd.interface.unwrap(),
        Some(s) => {
            InterfaceMode::from_str(&s, true).map_err(|_| CliError::usage(format!("bad interface mode '{s}'")))?
        }
        None => InterfaceMode::Extract,
    };
    st.report.set("ligand", &cmd.ligand);
    st.report.set("receptor", &cmd.receptor);
    st.report.set("request", request);
    st.report.set("alpha", opts.alpha);
    st.report.set("contact_offset", opts.contact_offset);

    let (lig, rec, truth) = st.run("load", |r| {
        let lig = load_input_mesh(&cmd.ligand, &cmd.mesh_input, cfg)?.mesh;
        let rec = load_input_mesh(&cmd.receptor, &cmd.mesh_input, cfg)?.mesh;
        let truth = match &cmd.truth_ligand {
            Some(p) => {
                let t = load_input_mesh(p, &cmd.mesh_input, cfg)?.mesh;
                if t.vertex_count() != lig.vertex_count() {
                    return Err(Error::DimensionMismatch(format!(
                        "truth ligand has {} vertices, ligand has {}",
                        t.vertex_count(),
                        lig.vertex_count()
                    ))
                    .into());
                }
                Some(t)
            }
            None => None,
        };
        r.set("ligand_vertices", lig.vertex_count());
        r.set("receptor_vertices", rec.vertex_count());
        Ok((lig, rec, truth))
    })?;

    let iface = st.run("interface", |r| {
        let iface = match (&cmd.ligand_mask, &cmd.receptor_mask) {
            (Some(ml), Some(mr)) => {
                r.set("interface_mode", "mask");
                Interface {
                    ligand: read_mask(ml, lig.vertex_count())?,
                    receptor: read_mask(mr, rec.vertex_count())?,
                    pairs: Vec::new(),
                }
            }
            _ if mode == InterfaceMode::All => {
                r.set("interface_mode", "all");
                Interface {
                    ligand: (0..lig.vertex_count()).collect(),
                    receptor: (0..rec.vertex_count()).collect(),
                    pairs: Vec::new(),
                }
            }
            _ => {
                r.set("interface_mode", "extract");
                r.set("interface_threshold", threshold);
                let i = extract_interface(&lig, &rec, threshold)?;
                if i.ligand.is_empty() || i.receptor.is_empty() {
                    return Err(Error::EmptyInterface { threshold }.into());
                }
                i
            }
        };
        r.set("ligand_mask_vertices", iface.ligand.len());
        r.set("receptor_mask_vertices", iface.receptor.len());
        Ok(iface)
    })?;

    let (fl, fr) = st.run("features", |r| {
        let (bl, br) = rayon::join(
            || surfharm::spectral::compute_basis(&lig, request, &solver),
            || surfharm::spectral::compute_basis(&rec, request, &solver),
        );
        let (bl, br) = (bl?, br?);
        let times = default_hks_times(&br, hks_count)?;
        let mut fl = hks_field(&lig, &bl, &times)?;
        let mut fr = hks_field(&rec, &br, &times)?;
        if let (Some(al), Some(ar)) = (&cmd.ligand_atoms, &cmd.receptor_atoms) {
            let table = cmd.features.table(cfg)?;
            let popts = cmd.features.options(cfg)?;
            let (al, _) = cmd.features.load_atoms(al, cfg)?;
            let (ar, _) = cmd.features.load_atoms(ar, cfg)?;
            let (cl, _) = project_atom_features(&al, &lig, &table, &popts)?;
            let (cr, _) = project_atom_features(&ar, &rec, &table, &popts)?;
            fl = assemble_input_features(&fl, &cl, None)?.0;
            fr = assemble_input_features(&fr, &cr, None)?.0;
        }
        r.set("hks_times", &times);
        r.set("channels", &fl.names);
        Ok((fl, fr))
    })?;

    let res = st.run("dock", |r| {
        let res = rigid_dock(&lig, &rec, &fl, &fr, &iface.ligand, &iface.receptor, &opts)?;
        let mut v = serde_json::to_value(&res.report).unwrap_or(Value::Null);
        let timing = v.as_object_mut().and_then(|m| m.remove("timing"));
        r.set("dock", v);
        if let Some(Value::Object(t)) = timing {
            for (k, x) in t {
                r.time(&format!("dock_{k}"), x.as_f64().unwrap_or(0.0));
            }
        }
        Ok(res)
    })?;

    let docked = lig.transformed(&res.transform.rotation, &res.transform.translation);
    if let Some(truth) = &truth {
        st.run("metrics", |r| {
            let z_star: Vec<_> = rec.vertices().iter().chain(truth.vertices()).copied().collect();
            let z: Vec<_> = rec.vertices().iter().chain(docked.vertices()).copied().collect();
            let split = rec.vertex_count();
            r.set("complex_rmsd", complex_rmsd(&z_star, &z)?);
            r.set("rmsd_interface_threshold", rmsd_threshold);
            r.set(
                "rmsd_interface_points",
                interface_indices(&z_star, split, rmsd_threshold).len(),
            );
            r.set(
                "interface_rmsd",
                interface_rmsd(&z_star, &z, split, rmsd_threshold).ok(),
            );
            Ok(())
        })?;
    }

    st.run("write", |_| {
        write_file(&cmd.out.join("transform.txt"), res.transform.to_text())?;
        let mut p2p = String::from("ligand_vertex,receptor_vertex\n");
        for (l, r) in res.ligand_vertices.iter().zip(&res.receptor_matches) {
            p2p.push_str(&format!("{l},{r}\n"));
        }
        write_file(&cmd.out.join("p2p.csv"), p2p)?;
        write_file(&cmd.out.join("docked_ligand.off"), write_off(&docked))
    })?;
    let mut report = st.report;
    report.time("total_s", start.elapsed().as_secs_f64());
    report.write(&cmd.out.join("report.json"))
}
