//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines always reach the
//! test output. Exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, Matrix3, Matrix4, SymmetricEigen, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use surfharm::correspondence::{complex_rmsd, fmap_to_p2p, interface_rmsd, kabsch, solve_fmap, solve_fmap_between};
use surfharm::features::{project_atom_features, AtomDescriptorTable, ProjectionOptions};
use surfharm::geometry::curvature_field;
use surfharm::harmonics::{
    apply_filter, default_hks_times, filter_gradients, fit_filter, from_spectral, heat_diffuse, heat_kernel_signature,
    project, smooth_coordinates, to_spectral, FitOptions,
};
use surfharm::mesh::{angle_defects, bumped_icosphere, grid_patch, icosphere, Point};
use surfharm::spectral::{assemble_mass, assemble_stiffness, compute_basis, weyl_slope, SolverOptions};
use surfharm::{AtomSet, FilterParams, SpectralBasis, SpectralCoeffs, SpectrumRequest, SurfaceField, TriangleMesh};

// criterion 1
const SPHERE_EIGEN_REL: f64 = 0.05;
const SPHERE_RUNTIME_S: f64 = 30.0;
// criterion 2
const WEYL_RATIO: f64 = 4.0;
const WEYL_RATIO_REL: f64 = 0.15;
// criterion 3
const MASS_AREA_REL: f64 = 1e-12;
const ORTHONORMALITY: f64 = 1e-8;
const EIGEN_RESIDUAL: f64 = 1e-8;
// criterion 4
const IDEMPOTENCE: f64 = 1e-10;
const PARSEVAL: f64 = 1e-9;
const SEMIGROUP: f64 = 1e-9;
const MEAN_CONSERVATION: f64 = 1e-10;
// criterion 5
const GRADIENT_DRAWS: usize = 100;
const GRADIENT_REL: f64 = 1e-4;
const FIT_LOSS: f64 = 1e-6;
// criterion 6
const RIGID_TRANSFORMS: usize = 20;
const INVARIANCE_REL: f64 = 1e-6;
// criterion 7
const GAUSS_BONNET: f64 = 1e-9;
const SPHERE_CURVATURE_REL: f64 = 0.10;
// criterion 8
const FMAP_IDENTITY: f64 = 1e-6;
const FMAP_RUNTIME_S: f64 = 10.0;
// criterion 9
const KABSCH_RECOVERY: f64 = 1e-9;
const IDENTICAL_RMSD: f64 = 1e-12;
const DISPLACEMENT_RMSD: f64 = 1e-10;
// criterion 10
const DOCK_RMSD: f64 = 0.5;
const DOCK_CORRELATION: f64 = 0.99;
const DOCK_RUNTIME_S: f64 = 60.0;
// criterion 11
const COMPLETE_RECONSTRUCTION: f64 = 1e-8;

/// Collected sub-checks of one criterion.
#[derive(Default)]
struct Check {
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn le(&mut self, what: &str, value: f64, limit: f64) {
        let line = format!("{what} {value:.3e} (<= {limit:e})");
        if value <= limit {
            self.notes.push(line);
        } else {
            self.failed.push(line);
        }
    }

    fn that(&mut self, what: &str, ok: bool, detail: String) {
        let line = format!("{what}: {detail}");
        if ok {
            self.notes.push(line);
        } else {
            self.failed.push(line);
        }
    }
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn basis(mesh: &TriangleMesh, k: usize) -> SpectralBasis {
    compute_basis(mesh, SpectrumRequest::Count(k), &opts()).expect("spectrum")
}

fn random_field(mesh: &TriangleMesh, channels: usize, rng: &mut ChaCha8Rng) -> SurfaceField {
    let values = DMatrix::from_fn(mesh.vertex_count(), channels, |_, _| rng.gen_range(-1.0..1.0));
    let names = (0..channels).map(|c| format!("f{c}")).collect();
    SurfaceField::new(values, names).unwrap().on_mesh(mesh)
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let (a, b, c) = (rng.gen_range(-PI..PI), rng.gen_range(-PI..PI), rng.gen_range(-PI..PI));
    UnitQuaternion::from_euler_angles(a, b, c)
        .to_rotation_matrix()
        .into_inner()
}

fn random_translation(rng: &mut ChaCha8Rng, scale: f64) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.gen_range(-scale..scale))
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    max_abs(&(a - b)) / max_abs(b).max(f64::MIN_POSITIVE)
}

/// Area by cross products, independent of the library.
fn area_of(mesh: &TriangleMesh) -> f64 {
    mesh.faces()
        .iter()
        .map(|f| {
            let [a, b, c] = f.map(|v| mesh.vertices()[v]);
            0.5 * (b - a).cross(&(c - a)).norm()
        })
        .sum()
}

/// `‖Lz − λBz‖ / (‖Bz‖ max(1, |λ|))` from a fresh assembly.
fn residuals(mesh: &TriangleMesh, b: &SpectralBasis) -> Vec<f64> {
    let l = assemble_stiffness(mesh).unwrap();
    let m = assemble_mass(mesh);
    (0..b.len())
        .map(|i| {
            let z: Vec<f64> = b.vectors.column(i).iter().copied().collect();
            let mut lz = vec![0.0; z.len()];
            let mut bz = vec![0.0; z.len()];
            l.mul_slice(&z, &mut lz);
            m.mul_slice(&z, &mut bz);
            let lam = b.eigenvalues[i];
            let r = lz
                .iter()
                .zip(&bz)
                .map(|(x, y)| (x - lam * y).powi(2))
                .sum::<f64>()
                .sqrt();
            r / (bz.iter().map(|x| x * x).sum::<f64>().sqrt() * lam.abs().max(1.0))
        })
        .collect()
}

fn suite() -> Vec<(String, TriangleMesh)> {
    let mut v: Vec<(String, TriangleMesh)> = (0..=4)
        .map(|s| (format!("icosphere({s},1)"), icosphere(s, 1.0).unwrap()))
        .collect();
    v.push(("icosphere(3,2)".into(), icosphere(3, 2.0).unwrap()));
    v.push(("bumped(2,1)".into(), bumped_icosphere(2, 1.0, 0.15, 11).unwrap()));
    v.push(("bumped(3,10)".into(), bumped_icosphere(3, 10.0, 0.08, 21).unwrap()));
    v.push(("patch(8)".into(), grid_patch(8, 7.0, 0.0, false).unwrap()));
    v
}

fn sphere_spectrum(c: &mut Check) {
    let start = Instant::now();
    let b = basis(&icosphere(4, 1.0).unwrap(), 25);
    let secs = start.elapsed().as_secs_f64();
    let expected: Vec<f64> = (1..=4usize)
        .flat_map(|l| std::iter::repeat_n((l * (l + 1)) as f64, 2 * l + 1))
        .collect();
    let worst = (1..=20)
        .map(|i| (b.eigenvalues[i] / expected[i - 1] - 1.0).abs())
        .fold(0.0, f64::max);
    c.le("max rel dev of lambda_1..20", worst, SPHERE_EIGEN_REL);
    // group sizes from gaps in the computed spectrum
    let mut groups = vec![1usize];
    for i in 2..b.len() {
        if b.eigenvalues[i] > 1.2 * b.eigenvalues[i - 1] {
            groups.push(1);
        } else {
            *groups.last_mut().unwrap() += 1;
        }
    }
    c.that("multiplicities", groups.starts_with(&[3, 5, 7]), format!("{groups:?}"));
    c.le("runtime s", secs, SPHERE_RUNTIME_S);
}

fn weyl(c: &mut Check) {
    let slope = |r: f64| {
        let m = icosphere(4, r).unwrap();
        weyl_slope(&basis(&m, 60), area_of(&m)).unwrap().slope
    };
    let ratio = slope(1.0) / slope(2.0);
    c.le(
        "|slope ratio / 4 - 1|",
        (ratio / WEYL_RATIO - 1.0).abs(),
        WEYL_RATIO_REL,
    );
}

fn fem_identities(c: &mut Check) {
    let (mut rows, mut area, mut ortho, mut resid) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut n = 0;
    for (_, m) in suite() {
        let l = assemble_stiffness(&m).unwrap();
        rows = rows.max(l.row_sums().iter().fold(0.0, |a, s| a.max(s.abs())));
        let a = area_of(&m);
        area = area.max((assemble_mass(&m).total_sum() - a).abs() / a);
        let b = basis(&m, m.vertex_count().min(20));
        let z = &b.vectors;
        let gram = z.transpose() * b.mass.mul_dense(z);
        ortho = ortho.max(max_abs(&(gram - DMatrix::identity(b.len(), b.len()))));
        resid = resid.max(residuals(&m, &b).into_iter().fold(0.0, f64::max));
        n += 1;
    }
    c.that(
        "stiffness row sums",
        rows == 0.0,
        format!("max |sum| {rows:e} on {n} fixtures"),
    );
    c.le("mass sum vs area rel", area, MASS_AREA_REL);
    c.le("|Z^T B Z - I|", ortho, ORTHONORMALITY);
    c.le("max eigen-residual", resid, EIGEN_RESIDUAL);
}

fn round_trip(c: &mut Check) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = bumped_icosphere(3, 1.0, 0.1, 7).unwrap();
    let b = basis(&m, 40);
    let f = random_field(&m, 3, &mut rng);
    let p = project(&f, &b).unwrap();
    c.le(
        "idempotence",
        rel_diff(&project(&p, &b).unwrap().values, &p.values),
        IDEMPOTENCE,
    );

    let coeffs = DMatrix::from_fn(b.len(), 3, |_, _| rng.gen_range(-1.0..1.0));
    let synth = from_spectral(&SpectralCoeffs::new(coeffs.clone()), &b).unwrap();
    let parseval = (0..3)
        .map(|j| {
            let x = synth.channel(j);
            let lhs = b.mass.bilinear(&x, &x);
            let rhs = coeffs.column(j).norm_squared();
            (lhs - rhs).abs() / rhs
        })
        .fold(0.0, f64::max);
    c.le("Parseval rel", parseval, PARSEVAL);

    let twice = heat_diffuse(&heat_diffuse(&f, &b, 0.3).unwrap(), &b, 0.7).unwrap();
    let once = heat_diffuse(&f, &b, 1.0).unwrap();
    c.le("heat semigroup rel", rel_diff(&twice.values, &once.values), SEMIGROUP);

    let ones = vec![1.0; m.vertex_count()];
    let total = b.mass.bilinear(&ones, &ones);
    let hot = heat_diffuse(&f, &b, 2.5).unwrap();
    let drift = (0..3)
        .map(|j| (b.mass.bilinear(&ones, &hot.channel(j)) - b.mass.bilinear(&ones, &f.channel(j))).abs() / total)
        .fold(0.0, f64::max);
    c.le("B-mean drift", drift, MEAN_CONSERVATION);
}

fn gradients(c: &mut Check) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = bumped_icosphere(3, 1.0, 0.1, 7).unwrap();
    let b = basis(&m, 40);
    let top = *b.eigenvalues.last().unwrap();
    let mut worst = 0.0f64;
    for _ in 0..GRADIENT_DRAWS {
        let f = random_field(&m, 1, &mut rng);
        let p = FilterParams::new(
            rng.gen_range(0.0..top),
            rng.gen_range(0.1..0.6) * top,
            rng.gen_range(0.0..0.5) / top,
        )
        .unwrap();
        let g = filter_gradients(&f, &b, &[p]).unwrap();
        let eval = |q: FilterParams| apply_filter(&f, &b, &[q]).unwrap().values;
        let steps = [1e-5 * top, 1e-5 * p.sigma, 1e-5 / top];
        for (i, analytic) in [&g.d_mu, &g.d_sigma, &g.d_t].into_iter().enumerate() {
            let h = steps[i];
            let shift = |s: f64| {
                let mut q = p;
                match i {
                    0 => q.mu += s,
                    1 => q.sigma += s,
                    _ => q.t += s,
                }
                q
            };
            // t = 0 sits on the constraint; use a one-sided difference there
            let fd = if i == 2 && p.t < h {
                (eval(shift(h)) - eval(p)) / h
            } else {
                (eval(shift(h)) - eval(shift(-h))) / (2.0 * h)
            };
            let scale = max_abs(&analytic.values).max(max_abs(&fd)).max(f64::MIN_POSITIVE);
            worst = worst.max(max_abs(&(&analytic.values - fd)) / scale);
        }
    }
    c.le(
        &format!("worst rel gradient error over {GRADIENT_DRAWS} draws"),
        worst,
        GRADIENT_REL,
    );

    let sphere = icosphere(3, 5.0).unwrap();
    let bs = basis(&sphere, 36);
    let input = project(&random_field(&sphere, 1, &mut rng), &bs).unwrap();
    let truth = FilterParams::new(0.5, 0.2, 1.0).unwrap();
    let target = apply_filter(&input, &bs, &[truth]).unwrap();
    let init = FilterParams::new(0.4, 0.3, 0.5).unwrap();
    let fit = fit_filter(&input, &target, &bs, init, &FitOptions::default()).unwrap();
    c.le("planted fit loss", fit.final_loss(), FIT_LOSS);
}

fn invariance(c: &mut Check) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let m = bumped_icosphere(3, 10.0, 0.08, 21).unwrap();
    let k = 30;
    let n_atoms = 150;
    let positions: Vec<Point> = (0..n_atoms).map(|_| random_translation(&mut rng, 12.0)).collect();
    let elements: Vec<String> = (0..n_atoms)
        .map(|_| ["C", "N", "O", "S", "H"][rng.gen_range(0..5)].to_string())
        .collect();
    let atoms = AtomSet::new(positions, elements).unwrap();
    let table = AtomDescriptorTable::default();
    let popts = ProjectionOptions::default();

    let b0 = basis(&m, k);
    let times = default_hks_times(&b0, 16).unwrap();
    let describe = |mesh: &TriangleMesh, atoms: &AtomSet| {
        let b = basis(mesh, k);
        let h = heat_kernel_signature(&b, &times, false).unwrap().values;
        let cf = curvature_field(mesh).unwrap();
        let curv = DMatrix::from_fn(
            mesh.vertex_count(),
            2,
            |v, j| if j == 0 { cf.gaussian[v] } else { cf.mean[v] },
        );
        let feat = project_atom_features(atoms, mesh, &table, &popts).unwrap().0.values;
        (b.eigenvalues, h, curv, feat)
    };
    let (e0, h0, k0, f0) = describe(&m, &atoms);
    let eig_rel = |e: &[f64]| {
        (1..k)
            .map(|i| (e[i] - e0[i]).abs() / e0[i])
            .fold((e[0] - e0[0]).abs() / e0[1], f64::max)
    };
    let (mut we, mut wh, mut wk, mut wf) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..RIGID_TRANSFORMS {
        let r = random_rotation(&mut rng);
        let t = random_translation(&mut rng, 20.0);
        let (e, h, kk, f) = describe(&m.transformed(&r, &t), &atoms.transformed(&r, &t));
        we = we.max(eig_rel(&e));
        wh = wh.max(rel_diff(&h, &h0));
        wk = wk.max(rel_diff(&kk, &k0));
        wf = wf.max(rel_diff(&f, &f0));
    }
    c.le("eigenvalues", we, INVARIANCE_REL);
    c.le("HKS", wh, INVARIANCE_REL);
    c.le("curvatures", wk, INVARIANCE_REL);
    c.le("projected features", wf, INVARIANCE_REL);
    let mirror = Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, 1.0));
    let mirrored = m.transformed(&mirror, &Vector3::zeros());
    c.le(
        "mirror eigenvalues",
        eig_rel(&basis(&mirrored, k).eigenvalues),
        INVARIANCE_REL,
    );
}

fn gauss_bonnet(c: &mut Check) {
    let worst = suite()
        .iter()
        .filter(|(_, m)| m.is_closed())
        .map(|(_, m)| (angle_defects(m).iter().sum::<f64>() - 4.0 * PI).abs())
        .fold(0.0, f64::max);
    c.le("|sum of angle defects - 4 pi|", worst, GAUSS_BONNET);
    for r in [1.0, 2.0] {
        let cf = curvature_field(&icosphere(3, r).unwrap()).unwrap();
        let dk = cf.gaussian.iter().map(|g| (g * r * r - 1.0).abs()).fold(0.0, f64::max);
        let dh = cf.mean.iter().map(|h| (h * r - 1.0).abs()).fold(0.0, f64::max);
        c.le(&format!("r={r} K rel"), dk, SPHERE_CURVATURE_REL);
        c.le(&format!("r={r} H rel"), dh, SPHERE_CURVATURE_REL);
    }
}

fn hks48(mesh: &TriangleMesh, b: &SpectralBasis) -> SurfaceField {
    let times = default_hks_times(b, 48).unwrap();
    heat_kernel_signature(b, &times, true).unwrap().on_mesh(mesh)
}

fn functional_maps(c: &mut Check) {
    let m = bumped_icosphere(2, 1.0, 0.15, 11).unwrap();
    let k = 30;
    let bm = basis(&m, k);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let generic = to_spectral(&random_field(&m, 48, &mut rng), &bm).unwrap();
    let id = solve_fmap(&generic.coeffs, &generic.coeffs, &bm.eigenvalues, &bm.eigenvalues, 1.0).unwrap();
    c.le(
        "|C - I|_F identity pair",
        (id.c - DMatrix::identity(k, k)).norm(),
        FMAP_IDENTITY,
    );
    // low-pass descriptors leave high modes weakly excited, so the fixed ridge
    // shrinks their diagonal entries; reported, not gated
    let a = to_spectral(&hks48(&m, &bm), &bm).unwrap();
    let id = solve_fmap(&a.coeffs, &a.coeffs, &bm.eigenvalues, &bm.eigenvalues, 1.0).unwrap();
    c.notes.push(format!(
        "HKS-48 identity pair |C - I|_F {:.3e} (info)",
        (id.c - DMatrix::identity(k, k)).norm()
    ));

    let start = Instant::now();
    let mut perm: Vec<usize> = (0..m.vertex_count()).collect();
    for i in (1..perm.len()).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let n = m.permuted(&perm).unwrap();
    let bm = basis(&m, k);
    let bn = basis(&n, k);
    let a = to_spectral(&hks48(&m, &bm), &bm).unwrap();
    let b = to_spectral(&hks48(&n, &bn), &bn).unwrap();
    let f = solve_fmap_between(&a, &b, &bm, &bn, 1.0).unwrap();
    let p = fmap_to_p2p(&f, &bm, &bn).unwrap();
    let right = p.mapping.iter().zip(&perm).filter(|(x, y)| x == y).count();
    let secs = start.elapsed().as_secs_f64();
    c.that(
        "permutation recovered",
        right == perm.len(),
        format!("{right}/{} vertices", perm.len()),
    );
    c.le("runtime s", secs, FMAP_RUNTIME_S);
}

/// Optimal superposition RMSD by Horn's quaternion method.
fn horn_rmsd(target: &[Point], moving: &[Point]) -> f64 {
    let n = target.len() as f64;
    let ct = target.iter().sum::<Point>() / n;
    let cm = moving.iter().sum::<Point>() / n;
    let mut s = Matrix3::zeros();
    for (x, y) in moving.iter().zip(target) {
        s += (x - cm) * (y - ct).transpose();
    }
    let (sxx, sxy, sxz) = (s[(0, 0)], s[(0, 1)], s[(0, 2)]);
    let (syx, syy, syz) = (s[(1, 0)], s[(1, 1)], s[(1, 2)]);
    let (szx, szy, szz) = (s[(2, 0)], s[(2, 1)], s[(2, 2)]);
    #[rustfmt::skip]
    let nmat = Matrix4::new(
        sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
        syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
        szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
        sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz,
    );
    let eig = SymmetricEigen::new(nmat);
    let top = eig.eigenvalues.imax();
    let q = eig.eigenvectors.column(top);
    let rot = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]));
    let sum: f64 = moving
        .iter()
        .zip(target)
        .map(|(x, y)| (rot * (x - cm) - (y - ct)).norm_squared())
        .sum();
    (sum / n).sqrt()
}

fn kabsch_metrics(c: &mut Check) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let p: Vec<Point> = (0..50).map(|_| random_translation(&mut rng, 10.0)).collect();
        let r = random_rotation(&mut rng);
        let t = random_translation(&mut rng, 30.0);
        let q: Vec<Point> = p.iter().map(|x| r * x + t).collect();
        let fit = kabsch(&p, &q, None).unwrap();
        worst = worst.max((fit.rotation - r).amax()).max((fit.translation - t).amax());
    }
    c.le("planted transform error", worst, KABSCH_RECOVERY);

    let a = grid_patch(5, 4.0, 0.0, false).unwrap();
    let b = grid_patch(5, 4.0, 2.0, true).unwrap();
    let mut z: Vec<Point> = a.vertices().to_vec();
    let split = z.len();
    z.extend(b.vertices());
    let same = complex_rmsd(&z, &z)
        .unwrap()
        .max(interface_rmsd(&z, &z, split, 8.0).unwrap());
    c.le("identical complexes", same, IDENTICAL_RMSD);

    let base: Vec<Point> = (0..200).map(|_| random_translation(&mut rng, 1.0)).collect();
    let mut moved = base.clone();
    moved[17] += Vector3::new(0.0, 0.5, 0.0);
    let got = complex_rmsd(&base, &moved).unwrap();
    c.le(
        "one-point displacement vs Horn",
        (got - horn_rmsd(&base, &moved)).abs(),
        DISPLACEMENT_RMSD,
    );
}

fn run_cli(dir: &Path, args: &str) -> Result<std::process::Output, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_surfharm"))
        .current_dir(dir)
        .args(args.split_whitespace())
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(out)
    } else {
        Err(format!("`{args}`: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn self_docking(c: &mut Check) {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let start = Instant::now();
    let steps = [
        "fixture icosphere --subdiv 3 --radius 10 --amplitude 0.08 --seed 21 -o receptor.off",
        "fixture transform receptor.off --seed 7 --transform-out applied.txt -o ligand.off",
        "dock --ligand ligand.off --receptor receptor.off --interface all --truth-ligand receptor.off -o dock",
    ];
    for s in steps {
        if let Err(e) = run_cli(d, s) {
            c.that("pipeline", false, e);
            return;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let report: Value = serde_json::from_str(&std::fs::read_to_string(d.join("dock/report.json")).unwrap()).unwrap();
    c.le(
        "complex RMSD A",
        report["complex_rmsd"].as_f64().unwrap_or(f64::INFINITY),
        DOCK_RMSD,
    );
    let lowest = report["dock"]["correlations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["r"].as_f64().unwrap_or(f64::NEG_INFINITY))
        .fold(f64::INFINITY, f64::min);
    c.that(
        "min channel correlation",
        lowest > DOCK_CORRELATION,
        format!("{lowest:.6} (> {DOCK_CORRELATION})"),
    );
    c.le("runtime s", secs, DOCK_RUNTIME_S);
}

fn resolution(c: &mut Check) {
    let small = bumped_icosphere(1, 1.0, 0.1, 3).unwrap();
    let n = small.vertex_count();
    let full = basis(&small, n);

    // centroid weighted by one third of the adjacent face areas
    let mut w = vec![0.0; n];
    for f in small.faces() {
        let [a, b, cc] = f.map(|v| small.vertices()[v]);
        let third = 0.5 * (b - a).cross(&(cc - a)).norm() / 3.0;
        for &v in f {
            w[v] += third;
        }
    }
    let centroid = small.vertices().iter().zip(&w).map(|(p, wi)| p * *wi).sum::<Point>() / w.iter().sum::<f64>();
    let one = smooth_coordinates(&small, &full, 1).unwrap();
    let spread = one.vertices().iter().map(|p| (p - centroid).norm()).fold(0.0, f64::max);
    c.le("k_keep=1 distance to centroid", spread, 1e-10);

    let all = smooth_coordinates(&small, &full, n).unwrap();
    let back = all
        .vertices()
        .iter()
        .zip(small.vertices())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    c.le("complete basis reconstruction", back, COMPLETE_RECONSTRUCTION);

    let m = bumped_icosphere(3, 1.0, 0.1, 8).unwrap();
    let b = basis(&m, 60);
    let mass = assemble_mass(&m);
    let error = |k: usize| {
        let s = smooth_coordinates(&m, &b, k).unwrap();
        (0..3)
            .map(|d| {
                let diff: Vec<f64> = s
                    .vertices()
                    .iter()
                    .zip(m.vertices())
                    .map(|(x, y)| x[d] - y[d])
                    .collect();
                mass.bilinear(&diff, &diff)
            })
            .sum::<f64>()
            .sqrt()
    };
    let errs: Vec<f64> = (1..=60).map(error).collect();
    let rises = errs.windows(2).filter(|w| w[1] > w[0] * (1.0 + 1e-12)).count();
    c.that(
        "B-error non-increasing in k_keep",
        rises == 0,
        format!(
            "{rises} increases over k_keep 1..60, {:.3e} -> {:.3e}",
            errs[0], errs[59]
        ),
    );
}

fn data_outputs(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
                continue;
            }
            let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
            let mut bytes = std::fs::read(&p).unwrap();
            if p.extension().is_some_and(|e| e == "json") {
                let mut v: Value = serde_json::from_slice(&bytes).unwrap();
                if let Some(o) = v.as_object_mut() {
                    o.remove("timing");
                }
                bytes = serde_json::to_vec(&v).unwrap();
            }
            out.push((rel, bytes));
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out
}

fn determinism(c: &mut Check) {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut atoms = String::from("120\nrandom atoms\n");
    for _ in 0..120 {
        let p = random_translation(&mut rng, 11.0);
        let e = ["C", "N", "O", "S"][rng.gen_range(0..4)];
        atoms.push_str(&format!("{e} {} {} {}\n", p.x, p.y, p.z));
    }
    let commands = [
        "fixture icosphere --subdiv 3 -o s.off",
        "fixture icosphere --subdiv 3 --radius 10 --amplitude 0.08 --seed 21 -o r.off",
        "fixture patch --n 8 -o p.off",
        "fixture transform r.off --seed 3 --permute --transform-out t.txt --permutation-out perm.csv -o l.off",
        "fixture transform r.off --seed 4 -o rigid.off",
        "spectrum s.off r.off --k 30 -o spectrum",
        "spectrum r.off -o spectrum_lmax",
        "curvature s.off r.off p.off -o curvature",
        "hks s.off --k 36 --normalize -o hks",
        "smooth r.off --k-keep 12 -o smooth.off",
        "filter s.off --field curvature/s/curvature.csv --k 30 --mu 2 --sigma 3 --t 0.05 --gradients -o filter",
        "filter s.off --field curvature/s/curvature.csv --k 30 --heat 0.2 -o heat",
        "fit s.off --input filter/filtered.csv --target heat/filtered.csv --k 30 --steps 40 -o fit",
        "features r.off --atoms atoms.xyz --standardize -o features",
        "dock --ligand rigid.off --receptor r.off --interface all --truth-ligand r.off -o dock",
    ];
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (i, dir) in dirs.iter().enumerate() {
        std::fs::write(dir.path().join("atoms.xyz"), &atoms).unwrap();
        for cmd in commands {
            // the second run is single-threaded
            let cmd = if i == 0 {
                cmd.to_string()
            } else {
                format!("{cmd} --jobs 1")
            };
            if let Err(e) = run_cli(dir.path(), &cmd) {
                c.that("command", false, e);
                return;
            }
        }
        let reference = run_cli(dir.path(), "reference").map(|o| o.stdout).unwrap_or_default();
        std::fs::write(dir.path().join("reference.md"), reference).unwrap();
    }
    let a = data_outputs(dirs[0].path());
    let b = data_outputs(dirs[1].path());
    let names_match = a.iter().map(|x| &x.0).eq(b.iter().map(|x| &x.0));
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x.1 != y.1)
        .map(|(x, _)| x.0.as_str())
        .collect();
    c.that(
        "byte-identical outputs",
        names_match && differing.is_empty(),
        format!(
            "{} files from {} commands, differing: {differing:?}",
            a.len(),
            commands.len() + 1
        ),
    );
}

type Criterion = (&'static str, fn(&mut Check));

fn main() {
    let criteria: [Criterion; 12] = [
        ("sphere spectrum", sphere_spectrum),
        ("Weyl slope vs area", weyl),
        ("FEM matrix identities", fem_identities),
        ("harmonic round trip and Parseval", round_trip),
        ("filter gradients and fit", gradients),
        ("rigid and mirror invariance", invariance),
        ("Gauss-Bonnet and sphere curvature", gauss_bonnet),
        ("functional maps", functional_maps),
        ("Kabsch and RMSD metrics", kabsch_metrics),
        ("end-to-end self-docking", self_docking),
        ("resolution tuning", resolution),
        ("CLI determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut passed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut c = Check::default();
        if let Err(e) = panic::catch_unwind(AssertUnwindSafe(|| f(&mut c))) {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            c.failed.push(format!("panicked: {msg}"));
        }
        let ok = c.failed.is_empty();
        passed += usize::from(ok);
        let detail = c.failed.iter().chain(&c.notes).cloned().collect::<Vec<_>>().join("; ");
        println!(
            "[{}] {:>2} {name}: {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}
