#![allow(dead_code)]

use nalgebra::DMatrix;
use ppd_core::linalg::singular_values;
use ppd_core::{
    estimate_noise_sigma, truncate, BootstrapView, DenseMatrix, OrthonormalBasis, Truncation,
};

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix, independent of the
/// library's solvers. Returns eigenvalues in descending order and the matching
/// eigenvectors as columns.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[(i, j)] * m[(i, j)];
                }
            }
        }
        if off.sqrt() < 1e-15 * (1.0 + m.norm()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Spectral norm via the largest eigenvalue of `AᵀA`.
pub fn brute_norm(a: &DMatrix<f64>) -> f64 {
    let (vals, _) = jacobi_eigen(&(a.transpose() * a));
    vals.first().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Full `n x n` projector `UUᵀ`.
pub fn full_projector(u: &OrthonormalBasis) -> DMatrix<f64> {
    u.columns() * u.columns().transpose()
}

/// Projector on the span of the `k` leading eigenvectors of a symmetric matrix.
pub fn leading_eigenprojector(a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let (_, vecs) = jacobi_eigen(a);
    let top = vecs.columns(0, k).into_owned();
    &top * top.transpose()
}

/// One truncated view with its noise estimate, ready for the bootstrap.
pub struct TruncatedView {
    pub y: DMatrix<f64>,
    pub truncation: Truncation,
    pub sigma_hat: f64,
}

impl TruncatedView {
    pub fn new(view: &DenseMatrix, rank: usize) -> Self {
        let y = view.as_matrix().clone();
        let sv = singular_values(&y);
        let sigma_hat = estimate_noise_sigma(&sv, y.nrows(), y.ncols()).unwrap();
        let truncation = truncate(&y, rank).unwrap();
        Self {
            y,
            truncation,
            sigma_hat,
        }
    }

    pub fn bootstrap(&self) -> BootstrapView<'_> {
        BootstrapView {
            y: &self.y,
            truncation: &self.truncation,
            sigma_hat: self.sigma_hat,
        }
    }
}

pub fn fraction(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}

/// Every quantity of the perturbation oracle, computed with explicit `n x n`
/// projectors and the Jacobi solver.
#[derive(Debug)]
pub struct BruteOracle {
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub joint_bound: f64,
    pub individual_bounds: [f64; 2],
    pub joint_distance: f64,
    pub individual_distances: [f64; 2],
    pub hypothesis_holds: bool,
}

pub fn brute_oracle(
    truth: &ppd_core::SimTruth,
    estimates: &[OrthonormalBasis],
    joint_estimate: &OrthonormalBasis,
) -> BruteOracle {
    let n = truth.joint.ambient_dim();
    let eye = DMatrix::<f64>::identity(n, n);
    let p_joint = full_projector(&truth.joint);
    let p_ind: Vec<DMatrix<f64>> = truth.individuals.iter().map(full_projector).collect();
    let p: Vec<DMatrix<f64>> = p_ind.iter().map(|pi| &p_joint + pi).collect();
    let p_hat: Vec<DMatrix<f64>> = estimates.iter().map(full_projector).collect();
    let d: Vec<DMatrix<f64>> = (0..2).map(|k| &p_hat[k] - &p[k]).collect();
    let d12 = &d[0] * &d[1];
    let epsilon1 = brute_norm(&(&p[0] * (&d[0] + &d[1] + &d12) * &p[1]));
    let epsilon2 = brute_norm(&(&p[0] * &d[1] + &d[0] * &p[1] + &d12));
    let tau_max = brute_norm(&(&p_ind[0] * &p_ind[1]));

    let r_joint = &p[0] * &d[1] + &d[0] * &p[1] + &d12;
    let joint_bound = brute_norm(&(&r_joint + r_joint.transpose())) / (1.0 - tau_max);

    let p_joint_hat = full_projector(joint_estimate);
    let d_joint = &p_joint - &p_joint_hat;
    let perp = &eye - &p_joint;
    let perp_hat = &eye - &p_joint_hat;
    let mut individual_bounds = [0.0; 2];
    let mut individual_distances = [0.0; 2];
    for k in 0..2 {
        let dk = &p[k] - &p_hat[k];
        let r_k = &perp * &dk - &d_joint * &p[k] + &d_joint * &dk;
        individual_bounds[k] = 2.0 * brute_norm(&r_k);
        let rank_ind = estimates[k].rank() - joint_estimate.rank();
        let p_ind_hat = leading_eigenprojector(&(&perp_hat * &p_hat[k] * &perp_hat), rank_ind);
        individual_distances[k] = if rank_ind == truth.individuals[k].rank() {
            brute_norm(&(&p_ind[k] - p_ind_hat))
        } else {
            1.0
        };
    }
    let joint_distance = if joint_estimate.rank() == truth.joint.rank() {
        brute_norm(&d_joint)
    } else {
        1.0
    };
    BruteOracle {
        epsilon1,
        epsilon2,
        joint_bound,
        individual_bounds,
        joint_distance,
        individual_distances,
        hypothesis_holds: epsilon1 < 1.0 - tau_max - epsilon2,
    }
}

/// A small planted two-view structure (`n = 12`) with estimates obtained by
/// perturbing the true signal bases, and the joint estimate they induce.
pub fn small_instance(seed: u64) -> (ppd_core::SimTruth, Vec<OrthonormalBasis>, OrthonormalBasis) {
    use ppd_core::random::{gaussian_matrix, rng_from_seed};
    let cfg = ppd_core::SimConfig {
        n: 12,
        dims: vec![8, 9],
        joint_rank: 1 + (seed % 2) as usize,
        individual_ranks: vec![2, 2],
        angle_deg: 40.0 + 10.0 * (seed % 5) as f64,
        snr: f64::INFINITY,
        seed,
        rank_mode: ppd_core::RankMode::True,
        singular_value_range: (1.0, 2.0),
    };
    let (_, truth) = ppd_core::generate(&cfg).unwrap();
    let mut rng = rng_from_seed(seed ^ 0xfeed);
    let scale = 0.05 + 0.03 * (seed % 4) as f64;
    let estimates: Vec<OrthonormalBasis> = (0..2)
        .map(|k| {
            let u = truth.signal_basis(k).unwrap();
            let noisy = u.columns() + gaussian_matrix(12, u.rank(), scale, &mut rng);
            ppd_core::orthonormalize(&noisy, 1e-10).unwrap()
        })
        .collect();
    let joint = ppd_core::joint_basis(&estimates[0], &estimates[1], cfg.joint_rank).unwrap();
    (truth, estimates, joint)
}
