//! Deterministic perturbation quantities for simulation studies, where the
//! planted subspaces are known.
//!
//! With `P_k` the projector on the true signal column space and `P̂_k` on its
//! estimate, the joint cluster of `σ(P̂₁P̂₂)` can drop by at most
//! `ε₁ = ‖P₁(Δ₁ + Δ₂ + Δ₁Δ₂)P₂‖₂` and null singular values can rise by at most
//! `ε₂ = ‖P₁Δ₂ + Δ₁P₂ + Δ₁Δ₂‖₂`, where `Δ_k = P̂_k − P_k` (so that
//! `P̂₁P̂₂ = P₁P₂ + P₁Δ₂ + Δ₁P₂ + Δ₁Δ₂`). All norms are evaluated in a reduced
//! frame spanning the bases involved; no `n x n` projector is formed.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::decompose::individual_basis;
use crate::error::{invalid, Result};
use crate::linalg::{
    principal_spectrum, spectral_norm, subspace_distance, OrthonormalBasis, ReducedFrame,
};
use crate::sim::SimTruth;

/// Singular values below this are treated as zero when counting `rank(P_𝒩₁P_𝒩₂)`.
const NONZERO_TOL: f64 = 1e-10;

/// `(ε₁, ε₂)` from `d x d` projector coordinates.
pub(crate) fn epsilons_in_frame(
    p1: &DMatrix<f64>,
    p2: &DMatrix<f64>,
    p1_hat: &DMatrix<f64>,
    p2_hat: &DMatrix<f64>,
) -> (f64, f64) {
    let d1 = p1_hat - p1;
    let d2 = p2_hat - p2;
    let d12 = &d1 * &d2;
    let eps1 = spectral_norm(&(p1 * (&d1 + &d2 + &d12) * p2));
    let eps2 = spectral_norm(&(p1 * &d2 + &d1 * p2 + &d12));
    (eps1, eps2)
}

/// `ε₁` only; the bootstrap evaluates this once per replicate.
pub(crate) fn epsilon1_in_frame(
    p1: &DMatrix<f64>,
    p2: &DMatrix<f64>,
    p1_hat: &DMatrix<f64>,
    p2_hat: &DMatrix<f64>,
) -> f64 {
    let d1 = p1_hat - p1;
    let d2 = p2_hat - p2;
    let d12 = &d1 * &d2;
    spectral_norm(&(p1 * (d1 + d2 + d12) * p2))
}

/// `(ε₁, ε₂)` for true bases `u1, u2` and their estimates.
pub fn true_epsilons(
    u1: &OrthonormalBasis,
    u2: &OrthonormalBasis,
    u1_hat: &OrthonormalBasis,
    u2_hat: &OrthonormalBasis,
) -> Result<(f64, f64)> {
    let frame = ReducedFrame::spanning(&[u1, u2, u1_hat, u2_hat])?;
    Ok(epsilons_in_frame(
        &frame.projector(u1),
        &frame.projector(u2),
        &frame.projector(u1_hat),
        &frame.projector(u2_hat),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }
}

/// The three bands that contain the joint, non-orthogonal individual and
/// remaining singular values of `P̂₁P̂₂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterIntervals {
    pub joint: Interval,
    pub nonorthogonal: Interval,
    pub remaining: Interval,
    pub joint_dim: usize,
    pub nonorth_rank: usize,
    pub tau_min: f64,
    pub tau_max: f64,
}

impl ClusterIntervals {
    pub fn as_array(&self) -> [Interval; 3] {
        [self.joint, self.nonorthogonal, self.remaining]
    }

    /// Check a descending spectrum against the bands. Missing trailing values
    /// are zeros of the `n x n` product.
    pub fn contains(&self, spectrum: &[f64], tol: f64) -> bool {
        let needed = self.joint_dim + self.nonorth_rank;
        let mut values = spectrum.to_vec();
        if values.len() < needed {
            values.resize(needed, 0.0);
        }
        values.iter().enumerate().all(|(i, &v)| {
            let band = if i < self.joint_dim {
                &self.joint
            } else if i < needed {
                &self.nonorthogonal
            } else {
                &self.remaining
            };
            band.contains(v, tol)
        })
    }
}

/// Alignment `σ(P_ℐ₁P_ℐ₂)` of the planted individual subspaces; its nonzero part
/// is `σ(P_𝒩₁P_𝒩₂)`.
fn nonorthogonal_alignment(truth: &SimTruth) -> Result<(usize, f64, f64)> {
    if truth.individuals.len() != 2 {
        return Err(invalid("cluster intervals are defined for two views"));
    }
    let cos = principal_spectrum(&truth.individuals[0], &truth.individuals[1])?;
    let nonzero: Vec<f64> = cos.into_iter().filter(|&c| c > NONZERO_TOL).collect();
    let tau_max = nonzero.first().copied().unwrap_or(0.0);
    let tau_min = nonzero.last().copied().unwrap_or(0.0);
    Ok((nonzero.len(), tau_min, tau_max))
}

pub fn theorem1_intervals(truth: &SimTruth, eps1: f64, eps2: f64) -> Result<ClusterIntervals> {
    let (nonorth_rank, tau_min, tau_max) = nonorthogonal_alignment(truth)?;
    Ok(ClusterIntervals {
        joint: Interval {
            lo: (1.0 - eps1).max(0.0),
            hi: 1.0,
        },
        nonorthogonal: Interval {
            lo: (tau_min - eps1).max(0.0),
            hi: (tau_max + eps2).min(1.0),
        },
        remaining: Interval {
            lo: 0.0,
            hi: eps2.min(1.0),
        },
        joint_dim: truth.joint.rank(),
        nonorth_rank,
        tau_min,
        tau_max,
    })
}

/// Everything known about an estimate when the truth is available.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthOracle {
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub cluster_intervals: ClusterIntervals,
}

/// Oracle `ε₁, ε₂` and cluster intervals for two estimated marginal bases.
pub fn truth_oracle(truth: &SimTruth, estimates: &[OrthonormalBasis]) -> Result<TruthOracle> {
    if estimates.len() != 2 || truth.individuals.len() != 2 {
        return Err(invalid("the oracle is defined for two views"));
    }
    let u1 = truth.signal_basis(0)?;
    let u2 = truth.signal_basis(1)?;
    let (epsilon1, epsilon2) = true_epsilons(&u1, &u2, &estimates[0], &estimates[1])?;
    Ok(TruthOracle {
        epsilon1,
        epsilon2,
        cluster_intervals: theorem1_intervals(truth, epsilon1, epsilon2)?,
    })
}

/// Subspace error bounds and the realised errors they should dominate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceBounds {
    pub joint_bound: f64,
    pub individual_bounds: [f64; 2],
    pub joint_distance: f64,
    pub individual_distances: [f64; 2],
    /// `ε₁ < 1 − ‖P_𝒩₁P_𝒩₂‖₂ − ε₂`.
    pub hypothesis_holds: bool,
    /// Whether each marginal estimate has the true rank (needed for the individual bound).
    pub ranks_correct: [bool; 2],
    pub epsilon1: f64,
    pub epsilon2: f64,
}

impl SubspaceBounds {
    /// True when every bound whose hypotheses hold dominates its realised distance.
    pub fn dominated(&self, tol: f64) -> bool {
        if !self.hypothesis_holds {
            return true;
        }
        let joint_ok = self.joint_distance <= self.joint_bound + tol;
        let indiv_ok = (0..2).all(|k| {
            !self.ranks_correct[k]
                || self.individual_distances[k] <= self.individual_bounds[k] + tol
        });
        joint_ok && indiv_ok
    }
}

/// Right-hand sides of the joint and individual subspace error bounds, with
/// `R_𝒥 = P₁Δ₂ + Δ₁P₂ + Δ₁Δ₂` (`Δ = P̂ − P`) and
/// `R_ℐk = P_𝒥⊥Δ'_k − Δ_𝒥P_k + Δ_𝒥Δ'_k` (`Δ'_k = P_k − P̂_k`, `Δ_𝒥 = P_𝒥 − P_Ĵ`).
pub fn theorem2_bounds(
    truth: &SimTruth,
    estimates: &[OrthonormalBasis],
    joint_estimate: &OrthonormalBasis,
) -> Result<SubspaceBounds> {
    if estimates.len() != 2 || truth.individuals.len() != 2 {
        return Err(invalid("subspace bounds are defined for two views"));
    }
    let u = [truth.signal_basis(0)?, truth.signal_basis(1)?];
    let (_, _, tau_max) = nonorthogonal_alignment(truth)?;
    let mut individual_hat = Vec::with_capacity(2);
    for est in estimates {
        let r_joint = joint_estimate.rank();
        if est.rank() < r_joint {
            return Err(invalid(
                "joint estimate has larger rank than a marginal estimate",
            ));
        }
        individual_hat.push(individual_basis(est, joint_estimate, est.rank(), r_joint)?);
    }

    let frame = ReducedFrame::spanning(&[
        &truth.joint,
        &truth.individuals[0],
        &truth.individuals[1],
        &estimates[0],
        &estimates[1],
        joint_estimate,
    ])?;
    let p = [frame.projector(&u[0]), frame.projector(&u[1])];
    let p_hat = [
        frame.projector(&estimates[0]),
        frame.projector(&estimates[1]),
    ];
    let (epsilon1, epsilon2) = epsilons_in_frame(&p[0], &p[1], &p_hat[0], &p_hat[1]);

    let d1 = &p_hat[0] - &p[0];
    let d2 = &p_hat[1] - &p[1];
    let r_joint = &p[0] * &d2 + &d1 * &p[1] + &d1 * &d2;
    let joint_bound = spectral_norm(&(&r_joint + r_joint.transpose())) / (1.0 - tau_max);

    let p_j = frame.projector(&truth.joint);
    let p_j_hat = frame.projector(joint_estimate);
    let d_j = &p_j - &p_j_hat;
    let p_j_perp = frame.identity() - &p_j;
    let mut individual_bounds = [0.0; 2];
    for k in 0..2 {
        let dk = &p[k] - &p_hat[k];
        let r_k = &p_j_perp * &dk - &d_j * &p[k] + &d_j * &dk;
        individual_bounds[k] = 2.0 * spectral_norm(&r_k);
    }

    let joint_distance = subspace_distance(&truth.joint, joint_estimate)?;
    let individual_distances = [
        subspace_distance(&truth.individuals[0], &individual_hat[0])?,
        subspace_distance(&truth.individuals[1], &individual_hat[1])?,
    ];
    Ok(SubspaceBounds {
        joint_bound,
        individual_bounds,
        joint_distance,
        individual_distances,
        hypothesis_holds: epsilon1 < 1.0 - tau_max - epsilon2,
        ranks_correct: [
            estimates[0].rank() == u[0].rank(),
            estimates[1].rank() == u[1].rank(),
        ],
        epsilon1,
        epsilon2,
    })
}
