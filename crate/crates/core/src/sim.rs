//! Synthetic multi-view data with planted joint and individual subspaces,
//! subspace recovery scores and the replicated benchmark grid.
//!
//! Column spaces come from the left singular vectors `U` of a seeded `n x n`
//! Gaussian matrix: the joint subspace takes the first columns, view 1's
//! individual subspace the next block, and every further view `k` rotates
//! view 1's individual directions by the planted angle `φ` towards a fresh
//! block `B_k`: `I_k[:, i] = cos φ·I_1[:, i] + sin φ·B_k[:, i]`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::BootstrapConfig;
use crate::decompose::{decompose_multiview, DecomposeOptions, DecompositionResult, RankSpec};
use crate::error::{invalid, mismatch, Result};
use crate::linalg::{spectral_norm, thin_svd, DenseMatrix, OrthonormalBasis};
use crate::random::{derive_seed, gaussian_matrix, haar_basis, rng_from_seed, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    /// Decompose with the planted marginal ranks.
    True,
    /// Select marginal ranks from the data.
    Estimated,
    /// Planted ranks minus a draw from {1, 2, 3}.
    Under,
    /// Planted ranks plus a draw from {1, 2, 3}.
    Over,
}

impl RankMode {
    pub const ALL: [RankMode; 4] = [
        RankMode::True,
        RankMode::Estimated,
        RankMode::Under,
        RankMode::Over,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RankMode::True => "true",
            RankMode::Estimated => "estimated",
            RankMode::Under => "under",
            RankMode::Over => "over",
        }
    }
}

impl fmt::Display for RankMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RankMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        RankMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                invalid(format!(
                    "unknown rank mode '{s}' (expected true, estimated, under or over)"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    /// Column count `p_k` of each view.
    pub dims: Vec<usize>,
    pub joint_rank: usize,
    pub individual_ranks: Vec<usize>,
    /// Planted angle between individual subspaces, in degrees, within `(0, 90]`.
    pub angle_deg: f64,
    /// Signal-to-noise ratio; `f64::INFINITY` gives noiseless views.
    pub snr: f64,
    pub seed: u64,
    pub rank_mode: RankMode,
    /// Range of the uniform distribution the planted singular values are drawn from.
    pub singular_value_range: (f64, f64),
}

impl SimConfig {
    /// Two views: `n = 50`, `p = (80, 100)`, joint rank 4, individual ranks (5, 4).
    pub fn two_view(angle_deg: f64, snr: f64, rank_mode: RankMode, seed: u64) -> Self {
        Self {
            n: 50,
            dims: vec![80, 100],
            joint_rank: 4,
            individual_ranks: vec![5, 4],
            angle_deg,
            snr,
            seed,
            rank_mode,
            singular_value_range: (1.0, 2.0),
        }
    }

    /// Three views: `n = 35`, `p = (40, 45, 50)`, joint rank 3, individual ranks (4, 3, 3).
    pub fn three_view(angle_deg: f64, snr: f64, rank_mode: RankMode, seed: u64) -> Self {
        Self {
            n: 35,
            dims: vec![40, 45, 50],
            joint_rank: 3,
            individual_ranks: vec![4, 3, 3],
            angle_deg,
            snr,
            seed,
            rank_mode,
            singular_value_range: (1.0, 2.0),
        }
    }

    pub fn views(&self) -> usize {
        self.dims.len()
    }

    /// Planted marginal ranks `joint_rank + individual_ranks[k]`.
    pub fn true_ranks(&self) -> Vec<usize> {
        self.individual_ranks
            .iter()
            .map(|r| r + self.joint_rank)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.views();
        if k < 2 {
            return Err(invalid("a simulation needs at least two views"));
        }
        if self.individual_ranks.len() != k {
            return Err(invalid(format!(
                "{} individual ranks given for {k} views",
                self.individual_ranks.len()
            )));
        }
        if !(self.angle_deg > 0.0 && self.angle_deg <= 90.0) {
            return Err(invalid(format!(
                "angle must lie in (0, 90], got {}",
                self.angle_deg
            )));
        }
        if self.snr.is_nan() || self.snr <= 0.0 {
            return Err(invalid(format!("SNR must be positive, got {}", self.snr)));
        }
        let (lo, hi) = self.singular_value_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(invalid(format!(
                "singular value range ({lo}, {hi}) is not a positive interval"
            )));
        }
        let columns = self.joint_rank + self.individual_ranks.iter().sum::<usize>();
        if columns > self.n {
            return Err(invalid(format!(
                "planted subspaces need {columns} orthogonal directions but n = {}",
                self.n
            )));
        }
        for (k, (&p, r)) in self.dims.iter().zip(self.true_ranks()).enumerate() {
            if r > p {
                return Err(invalid(format!(
                    "view {k} has {p} columns but signal rank {r}"
                )));
            }
        }
        Ok(())
    }
}

/// The planted structure behind simulated views.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimTruth {
    pub joint: OrthonormalBasis,
    pub individuals: Vec<OrthonormalBasis>,
    /// Noise-free signals `X_k`; not serialised.
    #[serde(skip)]
    pub signals: Vec<DMatrix<f64>>,
    pub noise_sigmas: Vec<f64>,
    pub planted_angle: f64,
}

impl SimTruth {
    /// Basis of `col(X_k) = 𝒥 ⊕ ℐ_k`.
    pub fn signal_basis(&self, k: usize) -> Result<OrthonormalBasis> {
        let ind = self
            .individuals
            .get(k)
            .ok_or_else(|| invalid(format!("no view {k} in the planted structure")))?;
        OrthonormalBasis::concat(&[&self.joint, ind])
    }
}

fn uniform_values(count: usize, range: (f64, f64), rng: &mut Rng) -> Vec<f64> {
    (0..count)
        .map(|_| {
            if range.1 > range.0 {
                rng.random_range(range.0..range.1)
            } else {
                range.0
            }
        })
        .collect()
}

/// `U diag(d) Vᵀ` with `V` a Haar `p x r` basis.
fn planted_block(u: &DMatrix<f64>, p: usize, range: (f64, f64), rng: &mut Rng) -> DMatrix<f64> {
    let r = u.ncols();
    let d = uniform_values(r, range, rng);
    let v = haar_basis(p, r, rng);
    let mut scaled = u.clone();
    for (j, s) in d.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*s);
    }
    scaled * v.columns().transpose()
}

/// Views `Y_k = J_k + I_k + Z_k` and the planted structure; deterministic in `cfg.seed`.
pub fn generate(cfg: &SimConfig) -> Result<(Vec<DenseMatrix>, SimTruth)> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let n = cfg.n;
    let u = thin_svd(&gaussian_matrix(n, n, 1.0, &mut rng)).left;
    let rj = cfg.joint_rank;
    let r1 = cfg.individual_ranks[0];
    let joint = u.columns(0, rj).into_owned();
    let first = u.columns(rj, r1).into_owned();
    let (c, s) = (
        cfg.angle_deg.to_radians().cos(),
        cfg.angle_deg.to_radians().sin(),
    );

    let mut individuals = vec![first.clone()];
    let mut offset = rj + r1;
    for &rk in &cfg.individual_ranks[1..] {
        let fresh = u.columns(offset, rk).into_owned();
        offset += rk;
        let mut ik = fresh.clone();
        for i in 0..rk.min(r1) {
            let col = first.column(i) * c + fresh.column(i) * s;
            ik.set_column(i, &col);
        }
        individuals.push(ik);
    }

    let mut views = Vec::with_capacity(cfg.views());
    let mut signals = Vec::with_capacity(cfg.views());
    let mut noise_sigmas = Vec::with_capacity(cfg.views());
    for (k, &p) in cfg.dims.iter().enumerate() {
        let x = planted_block(&joint, p, cfg.singular_value_range, &mut rng)
            + planted_block(&individuals[k], p, cfg.singular_value_range, &mut rng);
        let sk = if cfg.snr.is_infinite() {
            0.0
        } else {
            spectral_norm(&x) / (cfg.snr * ((n as f64).sqrt() + (p as f64).sqrt()))
        };
        let y = if sk > 0.0 {
            &x + gaussian_matrix(n, p, sk, &mut rng)
        } else {
            x.clone()
        };
        views.push(DenseMatrix::new(y)?);
        signals.push(x);
        noise_sigmas.push(sk);
    }
    let truth = SimTruth {
        joint: OrthonormalBasis::new(joint)?,
        individuals: individuals
            .into_iter()
            .map(OrthonormalBasis::new)
            .collect::<Result<_>>()?,
        signals,
        noise_sigmas,
        planted_angle: cfg.angle_deg,
    };
    Ok((views, truth))
}

/// Marginal ranks shifted by independent draws from {1, 2, 3}: subtracted for
/// `Under`, added for `Over`; other modes return the ranks unchanged. The flag
/// reports whether any rank had to be clamped up to 1.
pub fn misspecify_ranks(true_ranks: &[usize], mode: RankMode, seed: u64) -> (Vec<usize>, bool) {
    let mut rng = rng_from_seed(seed);
    let mut clamped = false;
    let ranks = true_ranks
        .iter()
        .map(|&r| match mode {
            RankMode::True | RankMode::Estimated => r,
            RankMode::Over => r + rng.random_range(1..=3usize),
            RankMode::Under => {
                let u = rng.random_range(1..=3usize);
                if r > u {
                    r - u
                } else {
                    clamped = true;
                    1
                }
            }
        })
        .collect();
    (ranks, clamped)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub tpp: f64,
    pub fdp: f64,
    pub f_score: f64,
}

/// True positive proportion, false discovery proportion and F-score of an
/// estimated subspace against the truth. An empty truth counts as fully
/// recovered (`TPP = 1`), an empty estimate as making no false discovery (`FDP = 0`).
pub fn score(estimate: &OrthonormalBasis, truth: &OrthonormalBasis) -> Result<ScoreTriple> {
    if estimate.ambient_dim() != truth.ambient_dim() {
        return Err(mismatch(format!(
            "estimate lives in dimension {}, truth in {}",
            estimate.ambient_dim(),
            truth.ambient_dim()
        )));
    }
    let overlap = if estimate.rank() == 0 || truth.rank() == 0 {
        0.0
    } else {
        truth.cross_gram(estimate)?.norm_squared()
    };
    let tpp = if truth.rank() == 0 {
        1.0
    } else {
        (overlap / truth.rank() as f64).clamp(0.0, 1.0)
    };
    let fdp = if estimate.rank() == 0 {
        0.0
    } else {
        (1.0 - overlap / estimate.rank() as f64).clamp(0.0, 1.0)
    };
    let denom = 1.0 - fdp + tpp;
    let f_score = if denom > 0.0 {
        2.0 * (1.0 - fdp) * tpp / denom
    } else {
        0.0
    };
    Ok(ScoreTriple { tpp, fdp, f_score })
}

/// Average F-score over the joint and every individual subspace.
pub fn average_f_score(result: &DecompositionResult, truth: &SimTruth) -> Result<f64> {
    if result.individuals.len() != truth.individuals.len() {
        return Err(mismatch("result and truth have different view counts"));
    }
    let mut total = score(&result.joint, &truth.joint)?.f_score;
    for (est, tru) in result.individuals.iter().zip(&truth.individuals) {
        total += score(est, tru)?.f_score;
    }
    Ok(total / (truth.individuals.len() + 1) as f64)
}

/// Outcome of one benchmark replication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub seed: u64,
    /// Average F-score, or the error message when the replication failed.
    pub outcome: std::result::Result<f64, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub config: SimConfig,
    pub mean_f: f64,
    pub mean_f_x10: f64,
    /// Standard error of the mean F-score (raw scale).
    pub stderr: f64,
    pub reps: usize,
    pub failures: usize,
    pub replications: Vec<Replication>,
}

/// One replication: simulate with `seed`, decompose per the cell's rank mode
/// and score.
pub fn run_replication(cell: &SimConfig, seed: u64, bootstrap: &BootstrapConfig) -> Result<f64> {
    let cfg = SimConfig {
        seed,
        ..cell.clone()
    };
    let (views, truth) = generate(&cfg)?;
    let ranks = match cfg.rank_mode {
        RankMode::Estimated => RankSpec::Auto,
        mode => {
            RankSpec::Explicit(misspecify_ranks(&cfg.true_ranks(), mode, derive_seed(seed, &[2])).0)
        }
    };
    let options = DecomposeOptions {
        ranks,
        bootstrap: BootstrapConfig {
            seed: derive_seed(seed, &[1]),
            ..*bootstrap
        },
        pairwise_average: false,
    };
    let result = decompose_multiview(&views, &options)?;
    average_f_score(&result, &truth)
}

/// Run `reps` replications of every cell. Replication `r` of cell `c` uses
/// seed `derive_seed(master_seed, [c, r])`, so cells are independent of each
/// other and of the execution order. Failed replications are counted and
/// excluded from the mean.
pub fn run_benchmark(
    grid: &[SimConfig],
    reps: usize,
    master_seed: u64,
    bootstrap: &BootstrapConfig,
) -> Result<Vec<CellResult>> {
    if reps == 0 {
        return Err(invalid("the benchmark needs at least one replication"));
    }
    for cell in grid {
        cell.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..reps).map(move |r| (c, r)))
        .collect();
    let outcomes: Vec<Replication> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let seed = derive_seed(master_seed, &[c as u64, r as u64]);
            let outcome = run_replication(&grid[c], seed, bootstrap).map_err(|e| e.to_string());
            Replication { seed, outcome }
        })
        .collect();
    Ok(grid
        .iter()
        .zip(outcomes.chunks(reps))
        .map(|(cell, reps_out)| summarise(cell, reps_out.to_vec()))
        .collect())
}

fn summarise(cell: &SimConfig, replications: Vec<Replication>) -> CellResult {
    let scores: Vec<f64> = replications
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().copied())
        .collect();
    let m = scores.len();
    let mean_f = if m == 0 {
        f64::NAN
    } else {
        scores.iter().sum::<f64>() / m as f64
    };
    let stderr = if m < 2 {
        0.0
    } else {
        let var = scores.iter().map(|s| (s - mean_f).powi(2)).sum::<f64>() / (m - 1) as f64;
        (var / m as f64).sqrt()
    };
    CellResult {
        config: cell.clone(),
        mean_f,
        mean_f_x10: 10.0 * mean_f,
        stderr,
        reps: replications.len(),
        failures: replications.len() - m,
        replications,
    }
}
