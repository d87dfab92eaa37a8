use std::io::BufWriter;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use surfharm::mesh::surface_area;
use surfharm::numfmt::sig9;
use surfharm::spectral::{compute_basis, weyl_slope, write_basis, BasisProvenance};

use crate::common::{
    for_each_input, load_input_mesh, output_dir, write_file, write_json, CliResult, MeshInput, Report, SpectrumArgs,
    DEFAULT_REQUEST,
};
use crate::config::Config;

/// Laplace-Beltrami spectrum: eigenvalues.csv, basis.bin (+ basis.json) and report.json.
#[derive(Args, Debug)]
pub struct SpectrumCmd {
    /// Mesh files, or `-` for stdin.
    #[arg(required = true)]
    pub inputs: Vec<String>,
    /// Output directory; one subdirectory per input when several are given.
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub mesh: MeshInput,
    #[command(flatten)]
    pub spectrum: SpectrumArgs,
}

pub fn eigenvalues_csv(eigenvalues: &[f64]) -> String {
    let mut s = String::from("index,eigenvalue\n");
    for (i, l) in eigenvalues.iter().enumerate() {
        s.push_str(&format!("{i},{}\n", sig9(*l)));
    }
    s
}

pub fn run(cmd: &SpectrumCmd, cfg: &Config) -> CliResult<()> {
    let request = cmd.spectrum.request(cfg, DEFAULT_REQUEST)?;
    let solver = cmd.spectrum.solver(cfg)?;
    for_each_input(&cmd.inputs, |i| {
        let start = Instant::now();
        let path = &cmd.inputs[i];
        let dir = output_dir(&cmd.out, &cmd.inputs, i);
        let loaded = load_input_mesh(path, &cmd.mesh, cfg)?;
        let t_load = start.elapsed().as_secs_f64();
        let mesh = &loaded.mesh;
        let basis = compute_basis(mesh, request, &solver)?;
        let t_solve = start.elapsed().as_secs_f64();

        write_file(&dir.join("eigenvalues.csv"), eigenvalues_csv(&basis.eigenvalues))?;
        let mut bin = Vec::new();
        write_basis(&basis, BufWriter::new(&mut bin))?;
        write_file(&dir.join("basis.bin"), bin)?;
        write_json(&dir.join("basis.json"), &BasisProvenance::of(&basis, &solver))?;

        let area = surface_area(mesh);
        let mut r = Report::new();
        r.set("input", path);
        r.set("mesh_hash", &basis.mesh_hash);
        r.set("vertices", mesh.vertex_count());
        r.set("faces", mesh.face_count());
        r.set("fan_triangulated_polygons", loaded.fan_triangulated);
        r.set("cleanup", &loaded.cleanup);
        r.set("cleanup_summary", loaded.cleanup.to_string());
        r.set("area", area);
        r.set("request", request);
        r.set("eigenpairs", basis.len());
        r.set("max_residual", basis.residuals.iter().copied().fold(0.0, f64::max));
        r.set("krylov_dim", basis.krylov_dim);
        r.set("weyl", weyl_slope(&basis, area).ok());
        r.time("load_s", t_load);
        r.time("solve_s", t_solve - t_load);
        r.time("total_s", start.elapsed().as_secs_f64());
        r.write(&dir.join("report.json"))
    })
}
