use std::path::PathBuf;

use clap::{Args, Subcommand};
use nalgebra::{Unit, UnitQuaternion, Vector3, Vector4};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surfharm::correspondence::RigidTransform;
use surfharm::mesh::{bumped_icosphere, grid_patch, write_off};

use crate::common::{load_input_mesh, write_file, CliError, CliResult, MeshInput};
use crate::config::Config;

/// Deterministic test meshes and transformed copies.
#[derive(Subcommand, Debug)]
pub enum FixtureCmd {
    /// Icosphere, optionally with seeded radial bumps.
    Icosphere {
        #[arg(long, default_value_t = 3)]
        subdiv: u32,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Relative radial noise amplitude in [0, 1).
        #[arg(long, default_value_t = 0.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Flat square patch of `n × n` vertices.
    Patch {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 7.0)]
        size: f64,
        #[arg(long, default_value_t = 0.0)]
        z: f64,
        /// Orient faces towards −z.
        #[arg(long)]
        facing_down: bool,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Rigidly transformed (and optionally vertex-permuted) copy of a mesh.
    Transform(TransformArgs),
}

#[derive(Args, Debug)]
pub struct TransformArgs {
    pub input: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest translation component; each is drawn uniformly from ±this.
    #[arg(long, default_value_t = 10.0)]
    pub max_shift: f64,
    /// Shuffle vertex order as well.
    #[arg(long)]
    pub permute: bool,
    /// Output mesh (OFF).
    #[arg(long, short)]
    pub out: PathBuf,
    /// Applied transform as a 4×4 matrix.
    #[arg(long)]
    pub transform_out: Option<PathBuf>,
    /// `new_vertex,old_vertex` CSV when permuting.
    #[arg(long)]
    pub permutation_out: Option<PathBuf>,
    #[command(flatten)]
    pub mesh_input: MeshInput,
}

/// Uniform random rotation from a normalized Gaussian 4-vector.
pub fn random_transform(rng: &mut ChaCha8Rng, max_shift: f64) -> RigidTransform {
    let mut gauss = || {
        let (u1, u2): (f64, f64) = (rng.gen::<f64>().max(f64::MIN_POSITIVE), rng.gen());
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let q = Unit::new_normalize(Vector4::new(gauss(), gauss(), gauss(), gauss()));
    let rotation = UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(q.into_inner()))
        .to_rotation_matrix()
        .into_inner();
    let translation = Vector3::from_fn(|_, _| rng.gen_range(-max_shift..=max_shift));
    RigidTransform { rotation, translation }
}

pub fn run(cmd: &FixtureCmd, cfg: &Config) -> CliResult<()> {
    match cmd {
        FixtureCmd::Icosphere {
            subdiv,
            radius,
            amplitude,
            seed,
            out,
        } => write_file(out, write_off(&bumped_icosphere(*subdiv, *radius, *amplitude, *seed)?)),
        FixtureCmd::Patch {
            n,
            size,
            z,
            facing_down,
            out,
        } => write_file(out, write_off(&grid_patch(*n, *size, *z, *facing_down)?)),
        FixtureCmd::Transform(a) => {
            if a.permutation_out.is_some() && !a.permute {
                return Err(CliError::usage("--permutation-out needs --permute"));
            }
            let mesh = load_input_mesh(&a.input, &a.mesh_input, cfg)?.mesh;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let t = random_transform(&mut rng, a.max_shift);
            let mut moved = mesh.transformed(&t.rotation, &t.translation);
            if a.permute {
                let mut perm: Vec<usize> = (0..mesh.vertex_count()).collect();
                perm.shuffle(&mut rng);
                moved = moved.permuted(&perm)?;
                if let Some(p) = &a.permutation_out {
                    let mut s = String::from("new_vertex,old_vertex\n");
                    for (new, old) in perm.iter().enumerate() {
                        s.push_str(&format!("{new},{old}\n"));
                    }
                    write_file(p, s)?;
                }
            }
            if let Some(p) = &a.transform_out {
                write_file(p, t.to_text())?;
            }
            write_file(&a.out, write_off(&moved))
        }
    }
}
