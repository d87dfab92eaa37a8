use nalgebra::DMatrix;

use super::SurfaceField;
use crate::error::{Error, Result};
use crate::numfmt::sig9;
use crate::spectral::SpectralBasis;

/// `count` log-spaced times in `[4 ln 10 / λ_{k−1}, 4 ln 10 / λ₁]`.
pub fn default_hks_times(basis: &SpectralBasis, count: usize) -> Result<Vec<f64>> {
    let k = basis.len();
    if k < 2 || count == 0 {
        return Err(Error::InvalidParameter(
            "default HKS times need at least two eigenpairs".into(),
        ));
    }
    let l1 = basis.eigenvalues[1];
    let lk = basis.eigenvalues[k - 1];
    if l1 <= 0.0 {
        return Err(Error::Degenerate("first nonzero eigenvalue is not positive".into()));
    }
    let c = 4.0 * std::f64::consts::LN_10;
    let (lo, hi) = ((c / lk).ln(), (c / l1).ln());
    if count == 1 {
        return Ok(vec![lo.exp()]);
    }
    Ok((0..count)
        .map(|i| (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp())
        .collect())
}

/// `HKS_t(x) = Σ_i exp(−λ_i t) φ_i(x)²`, one channel per time. With
/// `normalize`, each channel is divided by `Σ_i exp(−λ_i t)`.
pub fn heat_kernel_signature(basis: &SpectralBasis, times: &[f64], normalize: bool) -> Result<SurfaceField> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("no HKS times given".into()));
    }
    if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "HKS times must be positive and strictly ascending".into(),
        ));
    }
    let z = &basis.vectors;
    let sq = z.map(|x| x * x);
    let weights = DMatrix::from_fn(basis.len(), times.len(), |i, j| {
        (-basis.eigenvalues[i] * times[j]).exp()
    });
    let mut values = &sq * &weights;
    if normalize {
        for (j, mut col) in values.column_iter_mut().enumerate() {
            let s: f64 = weights.column(j).sum();
            col /= s;
        }
    }
    let names = times.iter().map(|t| format!("hks_t={}", sig9(*t))).collect();
    let mut out = SurfaceField::new(values, names)?;
    if !basis.mesh_hash.is_empty() {
        out.mesh_hash = Some(basis.mesh_hash.clone());
    }
    Ok(out)
}
