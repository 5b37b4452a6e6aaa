//! Marginal signal-rank selection by hard thresholding of singular values, and
//! the median-based noise level estimate it relies on.
//!
//! The cut-off is `ω(β)·y_med` with `ω(β) = 0.56β³ − 0.95β² + 1.82β + 1.43`,
//! `β = min(n,p)/max(n,p)` and `y_med` the median singular value of the data.
//! Writing `y_med = μ_β·σ̂`, where `μ_β` is the median singular value of an
//! `n x p` matrix of unit-variance noise, gives the noise estimate `σ̂`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{ensure_finite, thin_svd, OrthonormalBasis, ThinSvd};
use crate::quadrature::{bisect_increasing, integrate};

const MP_PANELS: usize = 64;
const MP_TOL: f64 = 1e-9;

/// The polynomial `ω(β)` multiplying the median singular value.
pub fn threshold_coefficient(beta: f64) -> f64 {
    0.56 * beta.powi(3) - 0.95 * beta.powi(2) + 1.82 * beta + 1.43
}

/// Aspect ratio oriented so that it lies in `(0, 1]`.
pub fn aspect_ratio(n: usize, p: usize) -> f64 {
    n.min(p) as f64 / n.max(p) as f64
}

/// Median of the Marchenko–Pastur law with ratio `beta ∈ (0, 1]`, eigenvalue scale.
pub fn mp_median_eigenvalue(beta: f64) -> f64 {
    mp_median_eigenvalue_with(beta, MP_PANELS)
}

pub(crate) fn mp_median_eigenvalue_with(beta: f64, panels: usize) -> f64 {
    assert!(
        beta > 0.0 && beta <= 1.0,
        "aspect ratio must be in (0, 1], got {beta}"
    );
    let lo = (1.0 - beta.sqrt()).powi(2);
    let hi = (1.0 + beta.sqrt()).powi(2);
    let half_width = 0.5 * (hi - lo);
    let at = |t: f64| lo + half_width * (1.0 - t.cos());
    // x = lo + c(1 − cos t) turns √((hi−x)(x−lo)) dx into c² sin²t dt and removes
    // the 1/√x blow-up at the lower edge when β = 1.
    let integrand = |t: f64| {
        let s = t.sin();
        half_width * half_width * s * s / (2.0 * std::f64::consts::PI * beta * at(t))
    };
    let total = integrate(integrand, 0.0, std::f64::consts::PI, panels);
    let cdf = |t: f64| {
        let k = ((t / std::f64::consts::PI) * panels as f64).ceil().max(1.0) as usize;
        integrate(integrand, 0.0, t, k) / total
    };
    let t_med = bisect_increasing(cdf, 0.5, 0.0, std::f64::consts::PI, MP_TOL * 1e-2);
    at(t_med)
}

/// Median singular value `μ_β` of an `n x p` matrix with i.i.d. unit-variance entries.
pub fn mp_median_sv(n: usize, p: usize) -> f64 {
    assert!(n >= 1 && p >= 1, "matrix dimensions must be positive");
    let beta = aspect_ratio(n, p);
    (n.max(p) as f64 * mp_median_eigenvalue(beta)).sqrt()
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Noise standard deviation estimate `median(σ(Y)) / μ_β` from the full spectrum of `Y`.
pub fn estimate_noise_sigma(singular_values: &[f64], n: usize, p: usize) -> Result<f64> {
    if singular_values.is_empty() {
        return Err(invalid("empty spectrum"));
    }
    if singular_values.len() != n.min(p) {
        return Err(invalid(format!(
            "expected the full spectrum of {} values, got {}",
            n.min(p),
            singular_values.len()
        )));
    }
    Ok(median(singular_values) / mp_median_sv(n, p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankSelection {
    pub rank: usize,
    pub threshold: f64,
    pub sigma_hat: f64,
    pub beta: f64,
    pub mp_median: f64,
}

/// Rank selection from the full spectrum of an `n x p` matrix.
pub fn select_rank_from_spectrum(
    singular_values: &[f64],
    n: usize,
    p: usize,
) -> Result<RankSelection> {
    let sigma_hat = estimate_noise_sigma(singular_values, n, p)?;
    let beta = aspect_ratio(n, p);
    let mp_median = mp_median_sv(n, p);
    let threshold = threshold_coefficient(beta) * mp_median * sigma_hat;
    let rank = singular_values.iter().filter(|&&s| s > threshold).count();
    Ok(RankSelection {
        rank,
        threshold,
        sigma_hat,
        beta,
        mp_median,
    })
}

pub fn select_rank(y: &DMatrix<f64>) -> Result<RankSelection> {
    ensure_finite(y, "data matrix")?;
    let s = crate::linalg::singular_values(y);
    select_rank_from_spectrum(&s, y.nrows(), y.ncols())
}

/// Rank-`r` truncated SVD of a data matrix.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub x_hat: DMatrix<f64>,
    pub basis: OrthonormalBasis,
    pub values: Vec<f64>,
    pub right: OrthonormalBasis,
}

impl Truncation {
    pub fn rank(&self) -> usize {
        self.values.len()
    }
}

pub fn truncate(y: &DMatrix<f64>, rank: usize) -> Result<Truncation> {
    ensure_finite(y, "data matrix")?;
    truncate_svd(&thin_svd(y), rank)
}

/// Truncate an already computed thin SVD.
pub fn truncate_svd(svd: &ThinSvd, rank: usize) -> Result<Truncation> {
    let (n, p) = (svd.left.nrows(), svd.right.nrows());
    if rank > n.min(p) {
        return Err(invalid(format!(
            "rank {rank} exceeds min(n, p) = {}",
            n.min(p)
        )));
    }
    let left = svd.left.columns(0, rank).into_owned();
    let right = svd.right.columns(0, rank).into_owned();
    let values = svd.values[..rank].to_vec();
    let mut scaled = left.clone();
    for (j, s) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*s);
    }
    let x_hat = scaled * right.transpose();
    Ok(Truncation {
        x_hat,
        basis: OrthonormalBasis::from_columns_unchecked(left),
        values,
        right: OrthonormalBasis::from_columns_unchecked(right),
    })
}
