use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use surfharm::features::{
    assemble_input_features, project_atom_features, AtomDescriptorTable, DistanceWeighting, Neighborhood,
    ProjectionOptions, DEFAULT_PROJECTION_RADIUS,
};
use surfharm::geometry::curvature_field;
use surfharm::harmonics::{
    apply_filter, default_hks_times, filter_gradients, fit_filter, heat_diffuse, heat_kernel_signature, project,
    read_field_csv, smooth_coordinates, write_field_csv, FitOptions,
};
use surfharm::mesh::{angle_defects, parse_atoms, write_obj, write_off, AtomFormat, MeshFormat};
use surfharm::{Error, FilterParams, SpectrumRequest, SurfaceField, TriangleMesh};

use crate::common::{
    for_each_input, load_input_mesh, output_dir, read_text, write_file, BasisSource, CliError, CliResult, MeshInput,
    Report, DEFAULT_REQUEST,
};
use crate::config::Config;

fn load_field(path: &str, mesh: &TriangleMesh) -> CliResult<SurfaceField> {
    let f = read_field_csv(&read_text(path)?)?;
    if f.vertex_count() != mesh.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "field '{path}' has {} rows, mesh has {} vertices after cleanup",
            f.vertex_count(),
            mesh.vertex_count()
        ))
        .into());
    }
    Ok(f.on_mesh(mesh))
}

/// Expands a one-element list to `n` channels.
fn per_channel(values: &[f64], n: usize, name: &str) -> CliResult<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; n]),
        m if m == n => Ok(values.to_vec()),
        m => Err(CliError::usage(format!("--{name} has {m} values for {n} channels"))),
    }
}

/// Spectral filtering of per-vertex fields.
#[derive(Args, Debug)]
pub struct FilterCmd {
    pub mesh: String,
    /// Field CSV (`vertex,<channels...>`).
    #[arg(long)]
    pub field: String,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Gaussian centre per channel (comma-separated, or one value for all).
    #[arg(long)]
    pub mu: Option<String>,
    /// Gaussian width per channel.
    #[arg(long)]
    pub sigma: Option<String>,
    /// Diffusion time per channel.
    #[arg(long)]
    pub t: Option<String>,
    /// Pure heat diffusion for this time instead of the Gaussian filter.
    #[arg(long, conflicts_with_all = ["mu", "sigma", "project"])]
    pub heat: Option<f64>,
    /// Projection onto the basis only.
    #[arg(long, conflicts_with_all = ["mu", "sigma", "t"])]
    pub project: bool,
    /// Also write d_mu.csv, d_sigma.csv and d_t.csv.
    #[arg(long)]
    pub gradients: bool,
    #[command(flatten)]
    pub mesh_input: MeshInput,
    #[command(flatten)]
    pub basis: BasisSource,
}

pub fn filter(cmd: &FilterCmd, cfg: &Config) -> CliResult<()> {
    let start = Instant::now();
    let mesh = load_input_mesh(&cmd.mesh, &cmd.mesh_input, cfg)?.mesh;
    let field = load_field(&cmd.field, &mesh)?;
    let basis = cmd.basis.obtain(&mesh, cfg, DEFAULT_REQUEST)?;
    let n = field.channel_count();
    let mut r = Report::new();
    r.set("input", &cmd.mesh);
    r.set("field", &cmd.field);
    r.set("eigenpairs", basis.len());
    let heat = cmd.heat;
    let out = if cmd.project {
        r.set("mode", "project");
        project(&field, &basis)?
    } else if let Some(t) = heat {
        r.set("mode", "heat");
        r.set("t", t);
        heat_diffuse(&field, &basis, t)?
    } else {
        let sigma = cfg
            .pick_list(cmd.sigma.as_deref(), "sigma")?
            .ok_or_else(|| CliError::usage("filter needs --sigma (or --heat / --project)"))?;
        let mu = cfg.pick_list(cmd.mu.as_deref(), "mu")?.unwrap_or(vec![0.0]);
        let t = cfg.pick_list(cmd.t.as_deref(), "t")?.unwrap_or(vec![0.0]);
        let (mu, sigma, t) = (
            per_channel(&mu, n, "mu")?,
            per_channel(&sigma, n, "sigma")?,
            per_channel(&t, n, "t")?,
        );
        let params = (0..n)
            .map(|c| FilterParams::new(mu[c], sigma[c], t[c]))
            .collect::<Result<Vec<_>, _>>()?;
        r.set("mode", "filter");
        r.set("params", &params);
        if cmd.gradients {
            let g = filter_gradients(&field, &basis, &params)?;
            write_file(&cmd.out.join("d_mu.csv"), write_field_csv(&g.d_mu))?;
            write_file(&cmd.out.join("d_sigma.csv"), write_field_csv(&g.d_sigma))?;
            write_file(&cmd.out.join("d_t.csv"), write_field_csv(&g.d_t))?;
        }
        apply_filter(&field, &basis, &params)?
    };
    write_file(&cmd.out.join("filtered.csv"), write_field_csv(&out))?;
    r.time("total_s", start.elapsed().as_secs_f64());
    r.write(&cmd.out.join("report.json"))
}

/// Fits filter parameters (μ, σ, t) per channel, mapping an input field onto a target field.
#[derive(Args, Debug)]
pub struct FitCmd {
    pub mesh: String,
    #[arg(long)]
    pub input: String,
    #[arg(long)]
    pub target: String,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[command(flatten)]
    pub mesh_input: MeshInput,
    #[command(flatten)]
    pub basis: BasisSource,
}

pub fn fit(cmd: &FitCmd, cfg: &Config) -> CliResult<()> {
    let start = Instant::now();
    let mesh = load_input_mesh(&cmd.mesh, &cmd.mesh_input, cfg)?.mesh;
    let input = load_field(&cmd.input, &mesh)?;
    let target = load_field(&cmd.target, &mesh)?;
    let basis = cmd.basis.obtain(&mesh, cfg, DEFAULT_REQUEST)?;
    if input.names != target.names {
        return Err(Error::DimensionMismatch("input and target fields have different channels".into()).into());
    }
    let init = FilterParams::new(cmd.mu, cmd.sigma, cmd.t)?;
    let opts = FitOptions {
        steps: cmd.steps,
        learning_rate: cmd.learning_rate,
    };
    let fits = (0..input.channel_count())
        .into_par_iter()
        .map(|c| {
            let one = |f: &SurfaceField| {
                SurfaceField::new(f.values.columns(c, 1).into_owned(), vec![f.names[c].clone()])
                    .map(|g| g.on_mesh(&mesh))
            };
            fit_filter(&one(&input)?, &one(&target)?, &basis, init, &opts)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let params: Vec<FilterParams> = fits.iter().map(|f| f.params).collect();
    let fitted = apply_filter(&input, &basis, &params)?;
    write_file(&cmd.out.join("fitted.csv"), write_field_csv(&fitted))?;
    let channels: Vec<_> = fits
        .iter()
        .zip(&input.names)
        .map(|(f, name)| {
            serde_json::json!({
                "channel": name,
                "params": f.params,
                "initial_loss": f.initial_loss,
                "final_loss": f.final_loss(),
                "losses": f.losses,
            })
        })
        .collect();
    let mut r = Report::new();
    r.set("eigenpairs", basis.len());
    r.set("init", init);
    r.set("channels", channels);
    r.time("total_s", start.elapsed().as_secs_f64());
    r.write(&cmd.out.join("fit.json"))
}

/// Heat kernel signatures: hks.csv with one channel per time.
#[derive(Args, Debug)]
pub struct HksCmd {
    #[arg(required = true)]
    pub inputs: Vec<String>,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Explicit ascending times (comma-separated).
    #[arg(long)]
    pub times: Option<String>,
    /// Number of log-spaced default times.
    #[arg(long)]
    pub hks_count: Option<usize>,
    /// Divide each channel by the heat trace.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub normalize: Option<bool>,
    #[command(flatten)]
    pub mesh_input: MeshInput,
    #[command(flatten)]
    pub basis: BasisSource,
}

pub fn hks(cmd: &HksCmd, cfg: &Config) -> CliResult<()> {
    let normalize = cfg.pick_or(cmd.normalize, "normalize", false)?;
    let count = cfg.pick_or(cmd.hks_count, "hks_count", 16)?;
    let times_flag = cfg.pick_list(cmd.times.as_deref(), "times")?;
    for_each_input(&cmd.inputs, |i| {
        let start = Instant::now();
        let dir = output_dir(&cmd.out, &cmd.inputs, i);
        let mesh = load_input_mesh(&cmd.inputs[i], &cmd.mesh_input, cfg)?.mesh;
        let basis = cmd.basis.obtain(&mesh, cfg, DEFAULT_REQUEST)?;
        let times = match &times_flag {
            Some(t) => t.clone(),
            None => default_hks_times(&basis, count)?,
        };
        let h = heat_kernel_signature(&basis, &times, normalize)?;
        write_file(&dir.join("hks.csv"), write_field_csv(&h))?;
        let mut r = Report::new();
        r.set("input", &cmd.inputs[i]);
        r.set("eigenpairs", basis.len());
        r.set("times", &times);
        r.set("normalized", normalize);
        r.time("total_s", start.elapsed().as_secs_f64());
        r.write(&dir.join("report.json"))
    })
}

/// Curvature and normals: curvature.csv.
#[derive(Args, Debug)]
pub struct CurvatureCmd {
    #[arg(required = true)]
    pub inputs: Vec<String>,
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub mesh_input: MeshInput,
}

pub fn curvature(cmd: &CurvatureCmd, cfg: &Config) -> CliResult<()> {
    for_each_input(&cmd.inputs, |i| {
        let start = Instant::now();
        let dir = output_dir(&cmd.out, &cmd.inputs, i);
        let mesh = load_input_mesh(&cmd.inputs[i], &cmd.mesh_input, cfg)?.mesh;
        let c = curvature_field(&mesh)?;
        let n = mesh.vertex_count();
        let values = nalgebra::DMatrix::from_fn(n, 6, |v, j| match j {
            0 => c.gaussian[v],
            1 => c.mean[v],
            2..=4 => c.normals[v][j - 2],
            _ => f64::from(u8::from(c.boundary[v])),
        });
        let names = ["gaussian", "mean", "normal_x", "normal_y", "normal_z", "boundary"];
        let field = SurfaceField::new(values, names.iter().map(|s| s.to_string()).collect())?;
        write_file(&dir.join("curvature.csv"), write_field_csv(&field))?;
        let mut r = Report::new();
        r.set("input", &cmd.inputs[i]);
        r.set("vertices", n);
        r.set("euler_characteristic", mesh.euler_characteristic());
        r.set("total_angle_defect", angle_defects(&mesh).iter().sum::<f64>());
        r.set("boundary_vertices", c.boundary.iter().filter(|&&b| b).count());
        r.time("total_s", start.elapsed().as_secs_f64());
        r.write(&dir.join("report.json"))
    })
}

/// Coordinates reconstructed from the lowest `k_keep` eigenvectors.
#[derive(Args, Debug)]
pub struct SmoothCmd {
    pub mesh: String,
    #[arg(long)]
    pub k_keep: usize,
    /// Output mesh (.off or .obj).
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub mesh_input: MeshInput,
    #[command(flatten)]
    pub basis: BasisSource,
}

pub fn smooth(cmd: &SmoothCmd, cfg: &Config) -> CliResult<()> {
    let mesh = load_input_mesh(&cmd.mesh, &cmd.mesh_input, cfg)?.mesh;
    let fallback = SpectrumRequest::Count(cmd.k_keep);
    let basis = cmd.basis.obtain(&mesh, cfg, fallback)?;
    let smooth = smooth_coordinates(&mesh, &basis, cmd.k_keep)?;
    let text = match MeshFormat::from_extension(&cmd.out) {
        Some(MeshFormat::Obj) => write_obj(&smooth),
        _ => write_off(&smooth),
    };
    write_file(&cmd.out, text)
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Weighting {
    Feature,
    Weight,
}

#[derive(Args, Debug, Clone, Default)]
pub struct FeatureArgs {
    /// Descriptor table CSV (`key,<columns...>`); default is an element one-hot table.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Atom neighbourhood radius in Å (default 6).
    #[arg(long, conflicts_with = "k_nearest")]
    pub radius: Option<f64>,
    /// Use the k nearest atoms instead of a radius.
    #[arg(long)]
    pub k_nearest: Option<usize>,
    /// How 1/d enters the average.
    #[arg(long, value_enum)]
    pub weighting: Option<Weighting>,
    /// Atom file format (xyz, pdb); inferred from the extension.
    #[arg(long)]
    pub atom_format: Option<String>,
}

impl FeatureArgs {
    pub fn table(&self, cfg: &Config) -> CliResult<AtomDescriptorTable> {
        match cfg.pick::<PathBuf>(self.table.clone(), "table")? {
            Some(p) => Ok(AtomDescriptorTable::from_csv(&read_text(&p.to_string_lossy())?)?),
            None => Ok(AtomDescriptorTable::default()),
        }
    }

    pub fn options(&self, cfg: &Config) -> CliResult<ProjectionOptions> {
        let neighborhood = match (self.radius, self.k_nearest) {
            (Some(r), _) => Neighborhood::Radius(r),
            (None, Some(k)) => Neighborhood::Nearest(k),
            (None, None) => match (cfg.get::<f64>("radius")?, cfg.get::<usize>("k_nearest")?) {
                (Some(_), Some(_)) => return Err(CliError::usage("configuration sets both radius and k_nearest")),
                (None, Some(k)) => Neighborhood::Nearest(k),
                (r, None) => Neighborhood::Radius(r.unwrap_or(DEFAULT_PROJECTION_RADIUS)),
            },
        };
        let weighting = match self.weighting {
            Some(Weighting::Weight) => DistanceWeighting::Weight,
            _ => DistanceWeighting::Feature,
        };
        Ok(ProjectionOptions {
            neighborhood,
            weighting,
        })
    }

    pub fn load_atoms(&self, path: &str, cfg: &Config) -> CliResult<(surfharm::AtomSet, usize)> {
        let fmt = match cfg.pick::<String>(self.atom_format.clone(), "atom_format")? {
            Some(f) => f.parse::<AtomFormat>()?,
            None => AtomFormat::from_extension(std::path::Path::new(path))
                .ok_or_else(|| Error::Unsupported(format!("cannot infer atom format of '{path}'")))?,
        };
        let (atoms, rep) = parse_atoms(&read_text(path)?, fmt)?;
        Ok((atoms, rep.skipped_altloc))
    }
}

/// Per-vertex input features: curvature and HKS channels plus projected atom descriptors.
#[derive(Args, Debug)]
pub struct FeaturesCmd {
    pub mesh: String,
    /// Atom coordinates (.xyz or .pdb).
    #[arg(long)]
    pub atoms: String,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Z-score every channel with mass-weighted statistics.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub standardize: Option<bool>,
    #[arg(long)]
    pub hks_count: Option<usize>,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[command(flatten)]
    pub mesh_input: MeshInput,
    #[command(flatten)]
    pub basis: BasisSource,
}

/// Gaussian and mean curvature followed by `count` normalized HKS channels.
pub fn geometric_field(mesh: &TriangleMesh, basis: &surfharm::SpectralBasis, times: &[f64]) -> CliResult<SurfaceField> {
    let c = curvature_field(mesh)?;
    let h = heat_kernel_signature(basis, times, true)?;
    let n = mesh.vertex_count();
    let mut values = nalgebra::DMatrix::zeros(n, 2 + h.channel_count());
    for v in 0..n {
        values[(v, 0)] = c.gaussian[v];
        values[(v, 1)] = c.mean[v];
    }
    values.columns_mut(2, h.channel_count()).copy_from(&h.values);
    let mut names = vec!["gaussian".to_string(), "mean".to_string()];
    names.extend(h.names);
    Ok(SurfaceField::new(values, names)?.on_mesh(mesh))
}

pub fn features(cmd: &FeaturesCmd, cfg: &Config) -> CliResult<()> {
    let start = Instant::now();
    let mesh = load_input_mesh(&cmd.mesh, &cmd.mesh_input, cfg)?.mesh;
    let (atoms, skipped) = cmd.features.load_atoms(&cmd.atoms, cfg)?;
    let table = cmd.features.table(cfg)?;
    let (chem, proj) = project_atom_features(&atoms, &mesh, &table, &cmd.features.options(cfg)?)?;
    let basis = cmd.basis.obtain(&mesh, cfg, DEFAULT_REQUEST)?;
    let times = default_hks_times(&basis, cfg.pick_or(cmd.hks_count, "hks_count", 16)?)?;
    let geom = geometric_field(&mesh, &basis, &times)?;
    let standardize = cfg.pick_or(cmd.standardize, "standardize", false)?;
    let (field, asm) = assemble_input_features(&geom, &chem, standardize.then_some(basis.mass.as_ref()))?;
    write_file(&cmd.out.join("features.csv"), write_field_csv(&field))?;
    let mut r = Report::new();
    r.set("input", &cmd.mesh);
    r.set("atoms", atoms.len());
    r.set("skipped_altloc", skipped);
    r.set("channels", &field.names);
    r.set("empty_vertices", proj.empty_vertices);
    r.set("standardized", standardize);
    r.set("constant_channels", &asm.constant_channels);
    r.time("total_s", start.elapsed().as_secs_f64());
    r.write(&cmd.out.join("report.json"))
}
