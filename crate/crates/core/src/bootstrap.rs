//! Rotational bootstrap estimate of `ε₁`, the largest downward movement of the
//! joint singular values of `P̂₁P̂₂`.
//!
//! Each replicate plants a pair of random column spaces whose principal cosines
//! equal the observed `σ(M̂)`, rebuilds both views from the estimated singular
//! values plus a noise replicate, re-estimates the column spaces by truncation
//! and records `‖P₁(Δ₁ + Δ₂ + Δ₁Δ₂)P₂‖₂` against the planted pair. The
//! estimate is the mean over replicates.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Error, Result};
use crate::linalg::{
    orthonormalize, principal_spectrum, thin_svd, OrthonormalBasis, ReducedFrame, DEFAULT_RANK_TOL,
};
use crate::oracle::{epsilon1_in_frame, epsilons_in_frame};
use crate::random::{derive_seed, fingerprint, gaussian_matrix, haar_basis, rng_from_seed};
use crate::rank::{truncate, Truncation};

/// Largest `|U1bᵀU2b|` entry tolerated by [`rotate_align`].
const ALIGN_ORTHO_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BootstrapVariant {
    /// Replicate column spaces are rotated to reproduce the observed `σ(M̂)`.
    #[default]
    Rotational,
    /// Replicate column spaces are drawn without alignment.
    Naive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    pub variant: BootstrapVariant,
    /// Also average the `ε₂` analogue over the replicates (experimental).
    pub estimate_epsilon2: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 100,
            seed: 42,
            variant: BootstrapVariant::Rotational,
            estimate_epsilon2: false,
        }
    }
}

impl BootstrapConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEstimate {
    pub epsilon1_hat: f64,
    pub per_replicate: Vec<f64>,
    pub variant: BootstrapVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon2_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_replicate_epsilon2: Option<Vec<f64>>,
}

/// One view as seen by the bootstrap: data, its rank-`r̂` truncation and the
/// estimated noise level.
#[derive(Clone, Copy, Debug)]
pub struct BootstrapView<'a> {
    pub y: &'a DMatrix<f64>,
    pub truncation: &'a Truncation,
    pub sigma_hat: f64,
}

/// Two orthogonal random bases: the first `r1` and next `r2` left singular
/// vectors of a seeded `n x n` Gaussian matrix.
pub fn haar_pair(
    n: usize,
    r1: usize,
    r2: usize,
    seed: u64,
) -> Result<(OrthonormalBasis, OrthonormalBasis)> {
    if r1 + r2 > n {
        return Err(invalid(format!(
            "cannot embed orthogonal bases of ranks {r1} and {r2} in dimension {n}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let g = gaussian_matrix(n, n, 1.0, &mut rng);
    let u = thin_svd(&g).left;
    Ok((
        OrthonormalBasis::from_columns_unchecked(u.columns(0, r1).into_owned()),
        OrthonormalBasis::from_columns_unchecked(u.columns(r1, r2).into_owned()),
    ))
}

/// Rotate `u2b` towards `u1b` so that their principal cosines become `sigma`:
/// column `i < min(r1, r2)` becomes `σᵢ·u1b[:, i] + √(1 − σᵢ²)·u2b[:, i]`.
pub fn rotate_align(
    u1b: &OrthonormalBasis,
    u2b: &OrthonormalBasis,
    sigma: &[f64],
) -> Result<OrthonormalBasis> {
    let g = u1b.cross_gram(u2b)?;
    let overlap = if g.is_empty() { 0.0 } else { g.amax() };
    if overlap > ALIGN_ORTHO_TOL {
        return Err(invalid(format!(
            "bases to align must be orthogonal (max |U1ᵀU2| = {overlap:.3e})"
        )));
    }
    let m = u1b.rank().min(u2b.rank());
    if sigma.len() != m {
        return Err(mismatch(format!(
            "{} cosines supplied for {m} aligned directions",
            sigma.len()
        )));
    }
    if let Some(bad) = sigma.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(invalid(format!("cosines must lie in [0, 1], got {bad}")));
    }
    let mut out = u2b.columns().clone();
    for (i, &s) in sigma.iter().enumerate() {
        let c = (1.0 - s * s).max(0.0).sqrt();
        let col = u1b.columns().column(i) * s + u2b.columns().column(i) * c;
        out.set_column(i, &col);
    }
    Ok(OrthonormalBasis::from_columns_unchecked(out))
}

/// Noise replicate `(Y − X̂) + P_Û G` with `G` i.i.d. `N(0, σ̂²)` and `Û` the
/// column space of `X̂`: the residual keeps the noise outside the signal
/// directions, `G` restores the noise that truncation removed along them.
pub fn noise_replicate(
    y: &DMatrix<f64>,
    x_hat: &DMatrix<f64>,
    sigma_hat: f64,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if y.shape() != x_hat.shape() {
        return Err(mismatch(format!(
            "data is {}x{} but signal estimate is {}x{}",
            y.nrows(),
            y.ncols(),
            x_hat.nrows(),
            x_hat.ncols()
        )));
    }
    if !(sigma_hat >= 0.0 && sigma_hat.is_finite()) {
        return Err(invalid(format!(
            "noise level must be finite and ≥ 0, got {sigma_hat}"
        )));
    }
    let basis = orthonormalize(x_hat, DEFAULT_RANK_TOL)?;
    Ok(noise_fill(&(y - x_hat), &basis, sigma_hat, seed))
}

fn noise_fill(
    residual: &DMatrix<f64>,
    basis: &OrthonormalBasis,
    sigma_hat: f64,
    seed: u64,
) -> DMatrix<f64> {
    if basis.rank() == 0 || sigma_hat == 0.0 {
        return residual.clone();
    }
    let mut rng = rng_from_seed(seed);
    let g = gaussian_matrix(residual.nrows(), residual.ncols(), sigma_hat, &mut rng);
    residual + basis.project(&g)
}

/// Per-view data prepared once and shared by every replicate.
struct Prepared {
    residual: DMatrix<f64>,
    basis: OrthonormalBasis,
    values: Vec<f64>,
    sigma_hat: f64,
    cols: usize,
}

impl Prepared {
    fn new(view: &BootstrapView<'_>) -> Result<Self> {
        let t = view.truncation;
        if view.y.shape() != t.x_hat.shape() {
            return Err(mismatch("truncation does not match its data matrix"));
        }
        if !(view.sigma_hat >= 0.0 && view.sigma_hat.is_finite()) {
            return Err(invalid(format!(
                "noise level must be finite and ≥ 0, got {}",
                view.sigma_hat
            )));
        }
        Ok(Self {
            residual: view.y - &t.x_hat,
            basis: t.basis.clone(),
            values: t.values.clone(),
            sigma_hat: view.sigma_hat,
            cols: view.y.ncols(),
        })
    }

    fn rank(&self) -> usize {
        self.values.len()
    }

    /// `U Σ̂ Vᵀ + Ê`, truncated back to the same rank.
    fn replicate_basis(
        &self,
        u: &OrthonormalBasis,
        seed_b: u64,
        slot: u64,
    ) -> Result<OrthonormalBasis> {
        let r = self.rank();
        let v = haar_basis(
            self.cols,
            r,
            &mut rng_from_seed(derive_seed(seed_b, &[1 + slot])),
        );
        let mut scaled = u.columns().clone();
        for (j, s) in self.values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*s);
        }
        let noise = noise_fill(
            &self.residual,
            &self.basis,
            self.sigma_hat,
            derive_seed(seed_b, &[3 + slot]),
        );
        let y_b = scaled * v.columns().transpose() + noise;
        Ok(truncate(&y_b, r)?.basis)
    }
}

/// Bootstrap estimate of `ε₁` with the configured variant.
pub fn estimate_epsilon1(
    view1: BootstrapView<'_>,
    view2: BootstrapView<'_>,
    cfg: &BootstrapConfig,
) -> Result<EpsilonEstimate> {
    run(view1, view2, cfg, cfg.variant)
}

/// Bootstrap estimate of `ε₁` without the alignment step, whatever `cfg.variant` says.
pub fn estimate_epsilon1_naive(
    view1: BootstrapView<'_>,
    view2: BootstrapView<'_>,
    cfg: &BootstrapConfig,
) -> Result<EpsilonEstimate> {
    run(view1, view2, cfg, BootstrapVariant::Naive)
}

fn canonical_key(view: &BootstrapView<'_>) -> (usize, usize, u64) {
    (view.truncation.rank(), view.y.ncols(), fingerprint(view.y))
}

fn run(
    view1: BootstrapView<'_>,
    view2: BootstrapView<'_>,
    cfg: &BootstrapConfig,
    variant: BootstrapVariant,
) -> Result<EpsilonEstimate> {
    if cfg.replicates == 0 {
        return Err(invalid("the bootstrap needs at least one replicate"));
    }
    let n = view1.y.nrows();
    if view2.y.nrows() != n {
        return Err(mismatch(format!(
            "views have {} and {} rows",
            n,
            view2.y.nrows()
        )));
    }
    // Canonical view order, so the estimate ignores argument order.
    let (a, b) = if canonical_key(&view2) < canonical_key(&view1) {
        (view2, view1)
    } else {
        (view1, view2)
    };
    let (r1, r2) = (a.truncation.rank(), b.truncation.rank());
    if r1 + r2 > n {
        return Err(Error::BootstrapInfeasible { r1, r2, n });
    }
    let want_eps2 = cfg.estimate_epsilon2;
    if r1 == 0 || r2 == 0 {
        let zeros = vec![0.0; cfg.replicates];
        return Ok(EpsilonEstimate {
            epsilon1_hat: 0.0,
            per_replicate: zeros.clone(),
            variant,
            epsilon2_hat: want_eps2.then_some(0.0),
            per_replicate_epsilon2: want_eps2.then_some(zeros),
        });
    }
    let sigma_m = principal_spectrum(&a.truncation.basis, &b.truncation.basis)?;
    let pa = Prepared::new(&a)?;
    let pb = Prepared::new(&b)?;

    let replicate = |rep: usize| -> Result<(f64, f64)> {
        let seed_b = derive_seed(cfg.seed, &[rep as u64]);
        let (u1, u2) = haar_pair(n, r1, r2, derive_seed(seed_b, &[0]))?;
        let u2 = match variant {
            BootstrapVariant::Rotational => rotate_align(&u1, &u2, &sigma_m)?,
            BootstrapVariant::Naive => u2,
        };
        let u1_hat = pa.replicate_basis(&u1, seed_b, 0)?;
        let u2_hat = pb.replicate_basis(&u2, seed_b, 1)?;
        let frame = ReducedFrame::spanning(&[&u1, &u2, &u1_hat, &u2_hat])?;
        let (p1, p2) = (frame.projector(&u1), frame.projector(&u2));
        let (p1_hat, p2_hat) = (frame.projector(&u1_hat), frame.projector(&u2_hat));
        if want_eps2 {
            let (e1, e2) = epsilons_in_frame(&p1, &p2, &p1_hat, &p2_hat);
            Ok((e1.clamp(0.0, 1.0), e2.clamp(0.0, 1.0)))
        } else {
            Ok((
                epsilon1_in_frame(&p1, &p2, &p1_hat, &p2_hat).clamp(0.0, 1.0),
                0.0,
            ))
        }
    };
    let pairs: Vec<(f64, f64)> = (0..cfg.replicates)
        .into_par_iter()
        .map(replicate)
        .collect::<Result<_>>()?;
    let per_replicate: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (epsilon2_hat, per_replicate_epsilon2) = if want_eps2 {
        let e2: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        (Some(mean(&e2)), Some(e2))
    } else {
        (None, None)
    };
    Ok(EpsilonEstimate {
        epsilon1_hat: mean(&per_replicate),
        per_replicate,
        variant,
        epsilon2_hat,
        per_replicate_epsilon2,
    })
}
