use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{from_spectral, to_spectral, SpectralCoeffs, SurfaceField};
use crate::error::{Error, Result};
use crate::spectral::SpectralBasis;

/// One `(μ, σ, t)` triple; `μ` and `σ` in eigenvalue units, `t` in inverse
/// eigenvalue units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub mu: f64,
    pub sigma: f64,
    pub t: f64,
}

impl FilterParams {
    pub fn new(mu: f64, sigma: f64, t: f64) -> Result<Self> {
        let p = Self { mu, sigma, t };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.sigma.is_finite() && self.t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite filter parameters {self:?}"
            )));
        }
        if self.sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if self.t < 0.0 {
            return Err(Error::InvalidParameter(format!("t must be >= 0, got {}", self.t)));
        }
        Ok(())
    }

    /// `F(λ)`.
    pub fn response(&self, lambda: f64) -> f64 {
        let d = lambda - self.mu;
        (-d * d / (self.sigma * self.sigma) - lambda * self.t).exp()
    }

    /// `(∂F/∂μ, ∂F/∂σ, ∂F/∂t)` at `λ`.
    pub fn response_gradient(&self, lambda: f64) -> [f64; 3] {
        let f = self.response(lambda);
        let d = lambda - self.mu;
        let s2 = self.sigma * self.sigma;
        [f * 2.0 * d / s2, f * 2.0 * d * d / (s2 * self.sigma), -lambda * f]
    }
}

fn check_channels(field: &SurfaceField, params: &[FilterParams]) -> Result<()> {
    if params.len() != field.channel_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} filter parameter sets for {} channels",
            params.len(),
            field.channel_count()
        )));
    }
    params.iter().try_for_each(FilterParams::validate)
}

fn scale_rows(coeffs: &SpectralCoeffs, gain: impl Fn(usize, usize) -> f64) -> SpectralCoeffs {
    let c = &coeffs.coeffs;
    SpectralCoeffs {
        coeffs: DMatrix::from_fn(c.nrows(), c.ncols(), |i, j| gain(i, j) * c[(i, j)]),
        names: coeffs.names.clone(),
        basis_id: coeffs.basis_id.clone(),
    }
}

/// Project, scale coefficient `i` of channel `j` by `F_j(λ_i)`, synthesize.
///
/// The Gaussian factor is not normalized, so unless `μ = 0` and `σ → ∞` the
/// constant mode is attenuated and the weighted mean is not conserved.
pub fn apply_filter(field: &SurfaceField, basis: &SpectralBasis, params: &[FilterParams]) -> Result<SurfaceField> {
    check_channels(field, params)?;
    let c = to_spectral(field, basis)?;
    let lam = &basis.eigenvalues;
    from_spectral(&scale_rows(&c, |i, j| params[j].response(lam[i])), basis)
}

/// Pure heat operator `exp(−λt)` on every channel; conserves the weighted mean.
pub fn heat_diffuse(field: &SurfaceField, basis: &SpectralBasis, t: f64) -> Result<SurfaceField> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t must be finite and >= 0, got {t}")));
    }
    let c = to_spectral(field, basis)?;
    let lam = &basis.eigenvalues;
    from_spectral(&scale_rows(&c, |i, _| (-lam[i] * t).exp()), basis)
}

/// Derivatives of [`apply_filter`] output with respect to each channel's parameters.
#[derive(Debug, Clone)]
pub struct FilterGradients {
    pub d_mu: SurfaceField,
    pub d_sigma: SurfaceField,
    pub d_t: SurfaceField,
}

pub fn filter_gradients(
    field: &SurfaceField,
    basis: &SpectralBasis,
    params: &[FilterParams],
) -> Result<FilterGradients> {
    check_channels(field, params)?;
    let c = to_spectral(field, basis)?;
    let lam = &basis.eigenvalues;
    let part = |p: usize| from_spectral(&scale_rows(&c, |i, j| params[j].response_gradient(lam[i])[p]), basis);
    Ok(FilterGradients {
        d_mu: part(0)?,
        d_sigma: part(1)?,
        d_t: part(2)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub steps: usize,
    pub learning_rate: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            steps: 2000,
            learning_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub params: FilterParams,
    pub initial_loss: f64,
    /// Loss after each step; non-increasing.
    pub losses: Vec<f64>,
}

impl FitResult {
    pub fn final_loss(&self) -> f64 {
        self.losses.last().copied().unwrap_or(self.initial_loss)
    }
}

/// Loss `½‖P f − g‖²_B` evaluated in coefficient space.
struct Objective<'a> {
    lam: &'a [f64],
    c: Vec<f64>,
    g: Vec<f64>,
    /// `‖g‖²_B − ‖Zᵀ B g‖²`: target energy outside the basis span.
    outside: f64,
}

impl Objective<'_> {
    fn loss(&self, p: &FilterParams) -> f64 {
        let inside: f64 = (0..self.c.len())
            .map(|i| {
                let r = p.response(self.lam[i]) * self.c[i] - self.g[i];
                r * r
            })
            .sum();
        0.5 * (inside + self.outside)
    }

    /// Gradient and Gauss-Newton matrix in coordinates scaled by `scale`.
    fn local_model(&self, p: &FilterParams, scale: &[f64; 3]) -> (Vector3<f64>, Matrix3<f64>) {
        let mut grad = Vector3::zeros();
        let mut gn = Matrix3::zeros();
        for i in 0..self.c.len() {
            let r = p.response(self.lam[i]) * self.c[i] - self.g[i];
            let d = p.response_gradient(self.lam[i]);
            let j = Vector3::new(d[0] * scale[0], d[1] * scale[1], d[2] * scale[2]) * self.c[i];
            grad += j * r;
            gn += j * j.transpose();
        }
        (grad, gn)
    }
}

/// Fits a single-channel filter to map `input` onto `target`.
///
/// Parameters are scaled per coordinate (`μ`, `σ` by the largest retained
/// eigenvalue, `t` by its inverse) and moved along the scaled gradient
/// preconditioned by the damped Gauss-Newton matrix:
/// `Δu = −(JᵀJ + I/η)⁻¹ ∇u`. For small `η` this is plain gradient descent
/// with rate `η`. A step that increases the loss halves `η` and retries; an
/// accepted step doubles it.
pub fn fit_filter(
    input: &SurfaceField,
    target: &SurfaceField,
    basis: &SpectralBasis,
    init: FilterParams,
    options: &FitOptions,
) -> Result<FitResult> {
    if input.channel_count() != 1 || target.channel_count() != 1 {
        return Err(Error::InvalidParameter(
            "fit_filter works on single-channel fields".into(),
        ));
    }
    if options.steps == 0 || !(options.learning_rate.is_finite() && options.learning_rate > 0.0) {
        return Err(Error::InvalidParameter(
            "fit_filter needs steps >= 1 and a positive learning rate".into(),
        ));
    }
    init.validate()?;
    let c = to_spectral(input, basis)?;
    let g = to_spectral(target, basis)?;
    let g_vec: Vec<f64> = g.coeffs.column(0).iter().copied().collect();
    let target_energy = target.b_norms_squared(&basis.mass)[0];
    let obj = Objective {
        lam: &basis.eigenvalues,
        c: c.coeffs.column(0).iter().copied().collect(),
        outside: (target_energy - g_vec.iter().map(|x| x * x).sum::<f64>()).max(0.0),
        g: g_vec,
    };

    let lmax = basis.eigenvalues.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let scale = [lmax, lmax, 1.0 / lmax];

    let mut p = init;
    let mut loss = obj.loss(&p);
    if !loss.is_finite() {
        return Err(Error::Divergence { step: 0 });
    }
    let initial_loss = loss;
    let mut rate = options.learning_rate;
    let mut losses = Vec::with_capacity(options.steps);
    for _ in 0..options.steps {
        let (grad, gn) = obj.local_model(&p, &scale);
        if grad.iter().all(|&x| x == 0.0) {
            losses.push(loss);
            continue;
        }
        let mut accepted = false;
        while rate > 1e-30 {
            let Some(step) = (gn + Matrix3::identity() / rate).cholesky().map(|ch| ch.solve(&grad)) else {
                rate *= 0.5;
                continue;
            };
            let trial = FilterParams {
                mu: p.mu - scale[0] * step[0],
                sigma: p.sigma - scale[1] * step[1],
                t: (p.t - scale[2] * step[2]).max(0.0),
            };
            if trial.validate().is_ok() {
                let l = obj.loss(&trial);
                if l.is_finite() && l <= loss {
                    p = trial;
                    loss = l;
                    accepted = true;
                    break;
                }
            }
            rate *= 0.5;
        }
        losses.push(loss);
        rate = if accepted {
            (rate * 2.0).min(1e12)
        } else {
            options.learning_rate
        };
    }
    Ok(FitResult {
        params: p,
        initial_loss,
        losses,
    })
}
