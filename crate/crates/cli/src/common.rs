use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use serde_json::{Map, Value};
use surfharm::mesh::{cleanup_mesh, load_mesh, CleanupReport, MeshFormat, DEFAULT_MERGE_EPS};
use surfharm::spectral::{compute_basis, read_basis, read_provenance, SolverOptions, DEFAULT_LAMBDA_MAX};
use surfharm::{Error, SpectralBasis, SpectrumRequest, TriangleMesh};

use crate::config::Config;

/// Failure reported to the user: a category and a message.
#[derive(Debug)]
pub struct CliError {
    pub category: &'static str,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            category: "usage",
            message: message.into(),
        }
    }

    /// 2 for input/output and parse failures, 1 for computation failures.
    pub fn exit_code(&self) -> i32 {
        match self.category {
            "io" | "parse" | "usage" => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": { "category": self.category, "message": self.message } }).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            category: e.category(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn io_context(path: &Path, e: std::io::Error) -> CliError {
    CliError {
        category: "io",
        message: format!("{}: {e}", path.display()),
    }
}

pub fn read_text(path: &str) -> CliResult<String> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| io_context(Path::new(path), e))
}

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_context(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_context(path, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError {
        category: "io",
        message: e.to_string(),
    })?;
    s.push('\n');
    write_file(path, s)
}

/// JSON report with a separate `timing` object, kept last.
pub struct Report {
    fields: Map<String, Value>,
    timing: Map<String, Value>,
}

impl Report {
    pub fn new() -> Self {
        Self {
            fields: Map::new(),
            timing: Map::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.fields
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn time(&mut self, key: &str, seconds: f64) {
        self.timing.insert(key.to_string(), Value::from(seconds));
    }

    pub fn write(mut self, path: &Path) -> CliResult<()> {
        self.fields.insert("timing".into(), Value::Object(self.timing));
        write_json(path, &Value::Object(self.fields))
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct MeshInput {
    /// Mesh format (off, obj, ply); inferred from the extension, `off` for stdin.
    #[arg(long)]
    pub format: Option<String>,
    /// Vertex welding distance for cleanup.
    #[arg(long)]
    pub merge_eps: Option<f64>,
}

pub struct LoadedMesh {
    pub mesh: TriangleMesh,
    pub cleanup: CleanupReport,
    pub fan_triangulated: usize,
}

pub fn load_input_mesh(path: &str, input: &MeshInput, cfg: &Config) -> CliResult<LoadedMesh> {
    let format = match cfg.pick::<String>(input.format.clone(), "format")? {
        Some(f) => f.parse::<MeshFormat>()?,
        None if path == "-" => MeshFormat::Off,
        None => MeshFormat::from_extension(Path::new(path))
            .ok_or_else(|| Error::Unsupported(format!("cannot infer mesh format of '{path}'; use --format")))?,
    };
    let text = read_text(path)?;
    let (raw, load) = load_mesh(&text, format)?;
    let eps = cfg.pick_or(input.merge_eps, "merge_eps", DEFAULT_MERGE_EPS)?;
    let (mesh, cleanup) = cleanup_mesh(&raw, eps)?;
    Ok(LoadedMesh {
        mesh,
        cleanup,
        fan_triangulated: load.fan_triangulated,
    })
}

#[derive(Args, Debug, Clone, Default)]
pub struct SpectrumArgs {
    /// Number of eigenpairs.
    #[arg(long, conflicts_with = "lambda_max")]
    pub k: Option<usize>,
    /// Keep every eigenpair with eigenvalue at most this (default 0.3).
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Relative eigen-residual tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

impl SpectrumArgs {
    pub fn request(&self, cfg: &Config, fallback: SpectrumRequest) -> CliResult<SpectrumRequest> {
        if let Some(k) = self.k {
            return Ok(SpectrumRequest::Count(k));
        }
        if let Some(l) = self.lambda_max {
            return Ok(SpectrumRequest::MaxEigenvalue(l));
        }
        match (cfg.get::<usize>("k")?, cfg.get::<f64>("lambda_max")?) {
            (Some(_), Some(_)) => Err(CliError::usage("configuration sets both k and lambda_max")),
            (Some(k), None) => Ok(SpectrumRequest::Count(k)),
            (None, Some(l)) => Ok(SpectrumRequest::MaxEigenvalue(l)),
            (None, None) => Ok(fallback),
        }
    }

    pub fn solver(&self, cfg: &Config) -> CliResult<SolverOptions> {
        let mut o = SolverOptions::default();
        o.tolerance = cfg.pick_or(self.tolerance, "tolerance", o.tolerance)?;
        Ok(o)
    }
}

pub const DEFAULT_REQUEST: SpectrumRequest = SpectrumRequest::MaxEigenvalue(DEFAULT_LAMBDA_MAX);

#[derive(Args, Debug, Clone, Default)]
pub struct BasisSource {
    /// Precomputed basis container; a `basis.json` sidecar next to it is checked when present.
    #[arg(long)]
    pub basis: Option<PathBuf>,
    #[command(flatten)]
    pub spectrum: SpectrumArgs,
}

impl BasisSource {
    pub fn obtain(&self, mesh: &TriangleMesh, cfg: &Config, fallback: SpectrumRequest) -> CliResult<SpectralBasis> {
        match &self.basis {
            Some(path) => {
                let sidecar = path.with_extension("json");
                let prov = if sidecar.exists() {
                    Some(read_provenance(&read_text(&sidecar.to_string_lossy())?)?)
                } else {
                    None
                };
                let file = fs::File::open(path).map_err(|e| io_context(path, e))?;
                let basis = read_basis(std::io::BufReader::new(file), prov.as_ref())?;
                if basis.vertex_count() != mesh.vertex_count() {
                    return Err(Error::DimensionMismatch(format!(
                        "basis has {} vertices, mesh has {}",
                        basis.vertex_count(),
                        mesh.vertex_count()
                    ))
                    .into());
                }
                let hash = mesh.content_hash();
                if !basis.mesh_hash.is_empty() && basis.mesh_hash != hash {
                    return Err(Error::HashMismatch {
                        field: hash,
                        basis: basis.mesh_hash,
                    }
                    .into());
                }
                Ok(basis)
            }
            None => {
                let req = self.spectrum.request(cfg, fallback)?;
                Ok(compute_basis(mesh, req, &self.spectrum.solver(cfg)?)?)
            }
        }
    }
}

/// Output directory for input `i` of `n`: the directory itself for a single
/// input, else a subdirectory named after the input's file stem.
pub fn output_dir(out: &Path, inputs: &[String], i: usize) -> PathBuf {
    if inputs.len() == 1 {
        return out.to_path_buf();
    }
    let stem = if inputs[i] == "-" {
        "stdin".to_string()
    } else {
        Path::new(&inputs[i])
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("input{i}"))
    };
    out.join(stem)
}

/// Runs `f` on every input in parallel; the first failure in input order wins.
pub fn for_each_input(inputs: &[String], f: impl Fn(usize) -> CliResult<()> + Sync + Send) -> CliResult<()> {
    use rayon::prelude::*;
    if inputs.iter().filter(|s| *s == "-").count() > 1 {
        return Err(CliError::usage("stdin ('-') can be given only once"));
    }
    let results: Vec<CliResult<()>> = (0..inputs.len()).into_par_iter().map(f).collect();
    results.into_iter().collect()
}
