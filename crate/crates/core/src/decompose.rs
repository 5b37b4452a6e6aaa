//! Joint and individual subspace estimation from the spectrum of `P̂₁P̂₂`.
//!
//! Pipeline per view: truncated SVD at a selected (or given) marginal rank, then
//! per pair of views the product spectrum `σ(P̂ᵢP̂ⱼ)`, the bootstrap threshold
//! `1 − ε̂₁` and the random-alignment threshold `√λ₊`. The joint rank counts
//! singular values above both thresholds (the minimum over pairs for more than
//! two views); the joint basis is the leading eigenspace of the symmetrised
//! product of projections and the individual bases are what each marginal
//! basis has left outside it.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{estimate_epsilon1, BootstrapConfig, BootstrapView};
use crate::error::{invalid, mismatch, Result};
use crate::linalg::{
    principal_spectrum, sorted_symmetric_eigen, thin_svd, DenseMatrix, OrthonormalBasis,
    ReducedFrame,
};
use crate::noise_spectrum::noise_law;
use crate::random::derive_seed;
use crate::rank::{estimate_noise_sigma, select_rank_from_spectrum, truncate_svd, Truncation};

/// Orthogonality tolerance between the joint and individual bases.
pub const JOINT_INDIVIDUAL_TOL: f64 = 1e-6;
/// Largest view count for which the full permutation average is computed.
pub const MAX_PERMUTATION_VIEWS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductSpectrum {
    /// Singular values of `P̂₁P̂₂`, descending, in `[0, 1]`.
    pub values: Vec<f64>,
    /// `1 − ε̂₁`.
    pub bootstrap_threshold: f64,
    /// `√λ₊`.
    pub noise_threshold: f64,
}

impl ProductSpectrum {
    pub fn threshold(&self) -> f64 {
        self.bootstrap_threshold.max(self.noise_threshold)
    }
}

/// Per-pair quantities; two-view results have exactly one entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub views: [usize; 2],
    pub spectrum: ProductSpectrum,
    pub epsilon1_hat: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon2_hat: Option<f64>,
    pub lambda_plus: f64,
    pub joint_rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub ambient_dim: usize,
    pub joint: OrthonormalBasis,
    pub individuals: Vec<OrthonormalBasis>,
    /// Column spaces of the truncated views, `col(X̂_k)`.
    pub marginal_bases: Vec<OrthonormalBasis>,
    pub marginal_ranks: Vec<usize>,
    pub joint_rank: usize,
    /// Spectrum of the pair that determines the joint rank.
    pub spectrum: ProductSpectrum,
    pub epsilon1_hat: f64,
    pub sigma_hats: Vec<f64>,
    pub pairs: Vec<PairSummary>,
}

impl DecompositionResult {
    /// Check the structural invariants, e.g. after deserialising a result.
    pub fn validate(&self) -> Result<()> {
        let k = self.marginal_ranks.len();
        if k < 2
            || self.individuals.len() != k
            || self.marginal_bases.len() != k
            || self.sigma_hats.len() != k
        {
            return Err(invalid(
                "per-view fields must all have one entry per view (at least two)",
            ));
        }
        if self.joint.rank() != self.joint_rank {
            return Err(invalid("joint basis rank differs from joint_rank"));
        }
        let bases = std::iter::once(&self.joint)
            .chain(&self.individuals)
            .chain(&self.marginal_bases);
        if bases
            .into_iter()
            .any(|b| b.ambient_dim() != self.ambient_dim)
        {
            return Err(mismatch("bases do not share the ambient dimension"));
        }
        for (i, ind) in self.individuals.iter().enumerate() {
            if ind.rank() + self.joint_rank != self.marginal_ranks[i] {
                return Err(invalid(format!(
                    "individual rank of view {i} is inconsistent"
                )));
            }
            if self.marginal_bases[i].rank() != self.marginal_ranks[i] {
                return Err(invalid(format!(
                    "marginal basis of view {i} has the wrong rank"
                )));
            }
        }
        let values = &self.spectrum.values;
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) || values.windows(2).any(|w| w[0] < w[1])
        {
            return Err(invalid("spectrum values must be descending within [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RankSpec {
    /// Select each marginal rank from the singular values of the view.
    #[default]
    Auto,
    /// One rank per view.
    Explicit(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct DecomposeOptions {
    pub ranks: RankSpec,
    pub bootstrap: BootstrapConfig,
    /// For many views, average the symmetrised pairwise products instead of
    /// all `K!` ordered products.
    pub pairwise_average: bool,
}

pub fn product_spectrum(
    u1_hat: &OrthonormalBasis,
    u2_hat: &OrthonormalBasis,
    eps1_hat: f64,
    lambda_plus: f64,
) -> Result<ProductSpectrum> {
    if !(0.0..=1.0).contains(&lambda_plus) {
        return Err(invalid(format!("λ₊ must lie in [0, 1], got {lambda_plus}")));
    }
    if !(eps1_hat >= 0.0 && eps1_hat.is_finite()) {
        return Err(invalid(format!(
            "ε̂₁ must be finite and ≥ 0, got {eps1_hat}"
        )));
    }
    Ok(ProductSpectrum {
        values: principal_spectrum(u1_hat, u2_hat)?,
        bootstrap_threshold: (1.0 - eps1_hat).clamp(0.0, 1.0),
        noise_threshold: lambda_plus.sqrt(),
    })
}

/// Number of values strictly above both thresholds.
pub fn joint_rank(spec: &ProductSpectrum) -> usize {
    let t = spec.threshold();
    spec.values.iter().filter(|&&v| v > t).count()
}

/// Leading `r_joint` eigenvectors of `½(P̂₁P̂₂ + P̂₂P̂₁)`.
pub fn joint_basis(
    u1_hat: &OrthonormalBasis,
    u2_hat: &OrthonormalBasis,
    r_joint: usize,
) -> Result<OrthonormalBasis> {
    multiview_joint_basis(&[u1_hat.clone(), u2_hat.clone()], r_joint, false)
}

/// Leading `r_joint` eigenvectors of the average of `P_{π(1)}⋯P_{π(K)}` over
/// all orderings `π` of the views, or of the symmetrised pairwise products
/// when `pairwise_average` is set. Computed inside the span of all bases.
pub fn multiview_joint_basis(
    bases: &[OrthonormalBasis],
    r_joint: usize,
    pairwise_average: bool,
) -> Result<OrthonormalBasis> {
    let k = bases.len();
    if k < 2 {
        return Err(invalid("at least two bases are needed"));
    }
    let n = bases[0].ambient_dim();
    let min_rank = bases.iter().map(|b| b.rank()).min().unwrap_or(0);
    if r_joint > min_rank {
        return Err(invalid(format!(
            "joint rank {r_joint} exceeds the smallest marginal rank {min_rank}"
        )));
    }
    if r_joint == 0 {
        for b in bases {
            if b.ambient_dim() != n {
                return Err(mismatch("bases live in different ambient dimensions"));
            }
        }
        return Ok(OrthonormalBasis::empty(n));
    }
    if k > MAX_PERMUTATION_VIEWS && !pairwise_average {
        return Err(invalid(format!(
            "{k} views would need {k}! ordered products; enable the pairwise average"
        )));
    }
    let refs: Vec<&OrthonormalBasis> = bases.iter().collect();
    let frame = ReducedFrame::spanning(&refs)?;
    let projectors: Vec<DMatrix<f64>> = bases.iter().map(|b| frame.projector(b)).collect();
    let d = frame.dim();
    let mut s = DMatrix::zeros(d, d);
    if pairwise_average || k == 2 {
        let mut count = 0.0;
        for i in 0..k {
            for j in (i + 1)..k {
                let pq = &projectors[i] * &projectors[j];
                s += &pq + pq.transpose();
                count += 2.0;
            }
        }
        s /= count;
    } else {
        let mut order: Vec<usize> = (0..k).collect();
        let mut count = 0.0;
        loop {
            let mut prod = projectors[order[0]].clone();
            for &i in &order[1..] {
                prod *= &projectors[i];
            }
            s += prod;
            count += 1.0;
            if !next_permutation(&mut order) {
                break;
            }
        }
        s /= count;
    }
    let (_, vecs) = sorted_symmetric_eigen(&s);
    let lifted = frame.lift(&vecs.columns(0, r_joint).into_owned());
    // Re-orthonormalise to remove rounding from the lift.
    let q = lifted.qr().q();
    OrthonormalBasis::new(q)
}

/// Lexicographic successor; false once the last permutation is reached.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len())
        .rev()
        .find(|&j| v[j] > v[i - 1])
        .expect("successor exists");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Leading `rk − r_joint` left singular vectors of `(I − P_Ĵ)Û_k`.
pub fn individual_basis(
    uk_hat: &OrthonormalBasis,
    joint: &OrthonormalBasis,
    rk: usize,
    r_joint: usize,
) -> Result<OrthonormalBasis> {
    if uk_hat.ambient_dim() != joint.ambient_dim() {
        return Err(mismatch(
            "marginal and joint bases live in different dimensions",
        ));
    }
    if r_joint > rk || rk > uk_hat.rank() || joint.rank() != r_joint {
        return Err(invalid(format!(
            "need joint rank {r_joint} ≤ rank {rk} ≤ basis rank {} and joint basis of rank {r_joint} (got {})",
            uk_hat.rank(),
            joint.rank()
        )));
    }
    let m = rk - r_joint;
    if m == 0 {
        return Ok(OrthonormalBasis::empty(uk_hat.ambient_dim()));
    }
    let residual = joint.residual(&uk_hat.leading(rk).into_columns());
    let left = thin_svd(&residual).left.columns(0, m).into_owned();
    // Second projection removes the rounding-level component along Ĵ.
    let q = joint.residual(&left).qr().q();
    OrthonormalBasis::new(q)
}

struct PreparedView {
    y: DMatrix<f64>,
    truncation: Truncation,
    sigma_hat: f64,
}

impl PreparedView {
    fn as_bootstrap(&self) -> BootstrapView<'_> {
        BootstrapView {
            y: &self.y,
            truncation: &self.truncation,
            sigma_hat: self.sigma_hat,
        }
    }
}

fn prepare_views(views: &[DenseMatrix], ranks: &RankSpec) -> Result<Vec<PreparedView>> {
    if views.len() < 2 {
        return Err(invalid(format!(
            "at least two views are required, got {}",
            views.len()
        )));
    }
    let n = views[0].nrows();
    for (i, v) in views.iter().enumerate() {
        if v.nrows() != n {
            return Err(mismatch(format!(
                "view {} has {} rows, view 0 has {n}",
                i,
                v.nrows()
            )));
        }
    }
    if let RankSpec::Explicit(r) = ranks {
        if r.len() != views.len() {
            return Err(invalid(format!(
                "{} ranks given for {} views",
                r.len(),
                views.len()
            )));
        }
    }
    views
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (n, p) = v.shape();
            let svd = thin_svd(v.as_matrix());
            let sigma_hat = estimate_noise_sigma(&svd.values, n, p)?;
            let rank = match ranks {
                RankSpec::Auto => select_rank_from_spectrum(&svd.values, n, p)?.rank,
                RankSpec::Explicit(r) => {
                    if r[i] > n.min(p) {
                        return Err(invalid(format!(
                            "rank {} for view {i} exceeds min(n, p) = {}",
                            r[i],
                            n.min(p)
                        )));
                    }
                    r[i]
                }
            };
            Ok(PreparedView {
                y: v.as_matrix().clone(),
                truncation: truncate_svd(&svd, rank)?,
                sigma_hat,
            })
        })
        .collect()
}

fn pair_summary(
    views: &[PreparedView],
    i: usize,
    j: usize,
    cfg: &BootstrapConfig,
) -> Result<PairSummary> {
    let n = views[i].y.nrows();
    let pair_cfg = BootstrapConfig {
        seed: derive_seed(cfg.seed, &[i as u64, j as u64]),
        ..*cfg
    };
    let eps = estimate_epsilon1(views[i].as_bootstrap(), views[j].as_bootstrap(), &pair_cfg)?;
    let (ri, rj) = (views[i].truncation.rank(), views[j].truncation.rank());
    let law = noise_law(ri as f64 / n as f64, rj as f64 / n as f64)?;
    let spectrum = product_spectrum(
        &views[i].truncation.basis,
        &views[j].truncation.basis,
        eps.epsilon1_hat,
        law.lambda_plus,
    )?;
    Ok(PairSummary {
        views: [i, j],
        joint_rank: joint_rank(&spectrum),
        spectrum,
        epsilon1_hat: eps.epsilon1_hat,
        epsilon2_hat: eps.epsilon2_hat,
        lambda_plus: law.lambda_plus,
    })
}

/// Two-view decomposition.
pub fn decompose(
    y1: &DenseMatrix,
    y2: &DenseMatrix,
    options: &DecomposeOptions,
) -> Result<DecompositionResult> {
    decompose_multiview(&[y1.clone(), y2.clone()], options)
}

/// Decomposition of `K ≥ 2` views sharing their rows. The joint rank is the
/// smallest pairwise joint rank; every view is split against the common Ĵ.
pub fn decompose_multiview(
    views: &[DenseMatrix],
    options: &DecomposeOptions,
) -> Result<DecompositionResult> {
    let prepared = prepare_views(views, &options.ranks)?;
    let k = prepared.len();
    if k > MAX_PERMUTATION_VIEWS && !options.pairwise_average {
        return Err(invalid(format!(
            "{k} views would need {k}! ordered products; enable the pairwise average"
        )));
    }
    let n = prepared[0].y.nrows();
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            pairs.push(pair_summary(&prepared, i, j, &options.bootstrap)?);
        }
    }
    let governing = pairs
        .iter()
        .enumerate()
        .min_by_key(|(idx, p)| (p.joint_rank, *idx))
        .map(|(idx, _)| idx)
        .expect("at least one pair");
    let r_joint = pairs[governing].joint_rank;
    let marginal_bases: Vec<OrthonormalBasis> = prepared
        .iter()
        .map(|v| v.truncation.basis.clone())
        .collect();
    let joint = multiview_joint_basis(&marginal_bases, r_joint, options.pairwise_average)?;
    let individuals = marginal_bases
        .iter()
        .map(|b| individual_basis(b, &joint, b.rank(), r_joint))
        .collect::<Result<Vec<_>>>()?;
    Ok(DecompositionResult {
        ambient_dim: n,
        joint,
        individuals,
        marginal_ranks: marginal_bases.iter().map(|b| b.rank()).collect(),
        marginal_bases,
        joint_rank: r_joint,
        spectrum: pairs[governing].spectrum.clone(),
        epsilon1_hat: pairs[governing].epsilon1_hat,
        sigma_hats: prepared.iter().map(|v| v.sigma_hat).collect(),
        pairs,
    })
}
