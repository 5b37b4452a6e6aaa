//! Dense matrices, orthonormal bases and the SVD-based subspace primitives the
//! rest of the crate is built on.
//!
//! Spectra of products of `n x n` projectors are never formed explicitly. For
//! bases `U1` (`n x r1`) and `U2` (`n x r2`) the nonzero singular values of
//! `U1 U1ᵀ U2 U2ᵀ` equal the singular values of the `r1 x r2` cross-Gram
//! `U1ᵀ U2`, and more general products are evaluated inside a small
//! [`ReducedFrame`] spanning every basis involved.

use std::ops::Deref;

use faer::{Mat, Side};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Result};

/// Tolerance on `‖UᵀU − I‖_max` accepted for an orthonormal basis.
pub const ORTHONORMAL_TOL: f64 = 1e-8;
/// Default relative cut-off below which singular values are dropped by [`compact_svd`].
pub const DEFAULT_DROP_TOL: f64 = 1e-12;
/// Default relative numerical-rank tolerance used by [`orthonormalize`].
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

pub(crate) fn ensure_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(format!("{what} contains non-finite entries")))
    }
}

/// Real `n x p` data matrix with finite entries and at least one row and column.
/// Rows are the shared samples.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix(DMatrix<f64>);

impl DenseMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(invalid(format!(
                "matrix must have at least one row and column, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        ensure_finite(&m, "matrix")?;
        Ok(Self(m))
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, data))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl Deref for DenseMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl TryFrom<DMatrix<f64>> for DenseMatrix {
    type Error = crate::Error;

    fn try_from(m: DMatrix<f64>) -> Result<Self> {
        Self::new(m)
    }
}

/// `n x r` matrix with orthonormal columns, representing an `r`-dimensional
/// subspace of `ℝⁿ`. Rank zero (the trivial subspace) is allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisRepr", into = "BasisRepr")]
pub struct OrthonormalBasis {
    columns: DMatrix<f64>,
}

/// Serialized form: dimensions plus column-major entries.
#[derive(Serialize, Deserialize)]
struct BasisRepr {
    ambient_dim: usize,
    rank: usize,
    data: Vec<f64>,
}

impl From<OrthonormalBasis> for BasisRepr {
    fn from(b: OrthonormalBasis) -> Self {
        BasisRepr {
            ambient_dim: b.ambient_dim(),
            rank: b.rank(),
            data: b.columns.as_slice().to_vec(),
        }
    }
}

impl TryFrom<BasisRepr> for OrthonormalBasis {
    type Error = crate::Error;

    fn try_from(r: BasisRepr) -> Result<Self> {
        if r.data.len() != r.ambient_dim * r.rank {
            return Err(invalid(format!(
                "basis data has {} entries, expected {}x{}",
                r.data.len(),
                r.ambient_dim,
                r.rank
            )));
        }
        OrthonormalBasis::new(DMatrix::from_column_slice(r.ambient_dim, r.rank, &r.data))
    }
}

impl OrthonormalBasis {
    /// Validate that `columns` is orthonormal within [`ORTHONORMAL_TOL`].
    pub fn new(columns: DMatrix<f64>) -> Result<Self> {
        ensure_finite(&columns, "basis")?;
        if columns.ncols() > columns.nrows() {
            return Err(invalid(format!(
                "{} orthonormal columns cannot fit in dimension {}",
                columns.ncols(),
                columns.nrows()
            )));
        }
        let r = columns.ncols();
        let gram = columns.transpose() * &columns;
        let err = (gram - DMatrix::<f64>::identity(r, r)).amax();
        if err > ORTHONORMAL_TOL {
            return Err(invalid(format!(
                "columns are not orthonormal (max |UᵀU − I| = {err:.3e})"
            )));
        }
        Ok(Self { columns })
    }

    pub(crate) fn from_columns_unchecked(columns: DMatrix<f64>) -> Self {
        debug_assert!(columns.ncols() <= columns.nrows());
        Self { columns }
    }

    /// The trivial subspace `{0}` of `ℝⁿ`.
    pub fn empty(ambient_dim: usize) -> Self {
        Self {
            columns: DMatrix::zeros(ambient_dim, 0),
        }
    }

    /// Standard basis vectors `e_i` for the given indices.
    pub fn coordinate(ambient_dim: usize, indices: &[usize]) -> Result<Self> {
        let mut m = DMatrix::zeros(ambient_dim, indices.len());
        for (j, &i) in indices.iter().enumerate() {
            if i >= ambient_dim {
                return Err(invalid(format!(
                    "index {i} out of range for dimension {ambient_dim}"
                )));
            }
            m[(i, j)] = 1.0;
        }
        Self::new(m)
    }

    pub fn ambient_dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn rank(&self) -> usize {
        self.columns.ncols()
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn into_columns(self) -> DMatrix<f64> {
        self.columns
    }

    /// Basis made of the first `k` columns.
    pub fn leading(&self, k: usize) -> Self {
        let k = k.min(self.rank());
        Self::from_columns_unchecked(self.columns.columns(0, k).into_owned())
    }

    /// `U·Q` for an orthogonal `Q`; the subspace is unchanged.
    pub fn rotated(&self, q: &DMatrix<f64>) -> Result<Self> {
        if q.nrows() != self.rank() {
            return Err(mismatch(format!(
                "rotation has {} rows, basis rank is {}",
                q.nrows(),
                self.rank()
            )));
        }
        Self::new(&self.columns * q)
    }

    pub fn cross_gram(&self, other: &OrthonormalBasis) -> Result<DMatrix<f64>> {
        same_ambient(self, other)?;
        Ok(self.columns.transpose() * &other.columns)
    }

    /// `P_U · m` without forming `P_U`.
    pub fn project(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        &self.columns * (self.columns.transpose() * m)
    }

    /// `(I − P_U) · m`.
    pub fn residual(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        m - self.project(m)
    }

    /// The explicit `n x n` projector. Only meant for small problems and checks.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.columns * self.columns.transpose()
    }

    /// Concatenate bases whose spans are mutually orthogonal.
    pub fn concat(parts: &[&OrthonormalBasis]) -> Result<Self> {
        let n = parts
            .first()
            .map(|b| b.ambient_dim())
            .ok_or_else(|| invalid("no bases to concatenate"))?;
        let total: usize = parts.iter().map(|b| b.rank()).sum();
        let mut m = DMatrix::zeros(n, total);
        let mut at = 0;
        for b in parts {
            if b.ambient_dim() != n {
                return Err(mismatch("bases live in different ambient dimensions"));
            }
            m.columns_mut(at, b.rank()).copy_from(b.columns());
            at += b.rank();
        }
        Self::new(m)
    }
}

fn same_ambient(a: &OrthonormalBasis, b: &OrthonormalBasis) -> Result<()> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(mismatch(format!(
            "ambient dimensions differ: {} vs {}",
            a.ambient_dim(),
            b.ambient_dim()
        )));
    }
    Ok(())
}

/// Thin SVD with singular values sorted in descending order. For an `n x p`
/// matrix, `left` is `n x k`, `right` is `p x k`, `k = min(n, p)`; zero singular
/// values are kept.
#[derive(Clone, Debug)]
pub struct ThinSvd {
    pub left: DMatrix<f64>,
    pub values: Vec<f64>,
    pub right: DMatrix<f64>,
}

fn to_faer(a: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

pub fn thin_svd(a: &DMatrix<f64>) -> ThinSvd {
    let (n, p) = a.shape();
    let k = n.min(p);
    if k == 0 {
        return ThinSvd {
            left: DMatrix::zeros(n, 0),
            values: Vec::new(),
            right: DMatrix::zeros(p, 0),
        };
    }
    let svd = to_faer(a)
        .thin_svd()
        .expect("SVD of a finite matrix converges");
    let (u, v) = (svd.U(), svd.V());
    let s = svd.S().column_vector();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]).then(i.cmp(&j)));
    let mut left = DMatrix::zeros(n, k);
    let mut right = DMatrix::zeros(p, k);
    let mut values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            left[(i, dst)] = u[(i, src)];
        }
        for i in 0..p {
            right[(i, dst)] = v[(i, src)];
        }
        values.push(s[src].max(0.0));
    }
    ThinSvd {
        left,
        values,
        right,
    }
}

/// All `min(n, p)` singular values, descending.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = to_faer(a)
        .singular_values()
        .expect("SVD of a finite matrix converges")
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Largest singular value; zero for an empty matrix.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted by
/// algebraic value, descending. Ties keep the solver's original order.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let d = m.nrows();
    if d == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = to_faer(&sym)
        .self_adjoint_eigen(Side::Lower)
        .expect("symmetric eigendecomposition converges");
    let (values, vectors) = (eig.S().column_vector(), eig.U());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    let vecs = DMatrix::from_fn(d, d, |i, j| vectors[(i, order[j])]);
    let vals = order.iter().map(|&i| values[i]).collect();
    (vals, vecs)
}

/// Compact SVD `A = U diag(s) Vᵀ` keeping only the strictly positive part of the spectrum.
#[derive(Clone, Debug)]
pub struct CompactSvd {
    pub left: OrthonormalBasis,
    pub singular_values: Vec<f64>,
    pub right: OrthonormalBasis,
}

impl CompactSvd {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.left.columns().clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*s);
        }
        scaled * self.right.columns().transpose()
    }
}

/// Compact SVD; values `≤ drop_tol·σ₁` are dropped.
pub fn compact_svd(a: &DMatrix<f64>, drop_tol: f64) -> Result<CompactSvd> {
    ensure_finite(a, "matrix")?;
    if !(drop_tol >= 0.0 && drop_tol.is_finite()) {
        return Err(invalid(format!(
            "drop tolerance must be finite and ≥ 0, got {drop_tol}"
        )));
    }
    let svd = thin_svd(a);
    let sigma1 = svd.values.first().copied().unwrap_or(0.0);
    let keep = svd
        .values
        .iter()
        .take_while(|&&s| s > 0.0 && s > drop_tol * sigma1)
        .count();
    Ok(CompactSvd {
        left: OrthonormalBasis::from_columns_unchecked(svd.left.columns(0, keep).into_owned()),
        singular_values: svd.values[..keep].to_vec(),
        right: OrthonormalBasis::from_columns_unchecked(svd.right.columns(0, keep).into_owned()),
    })
}

/// Orthonormal basis of `col(A)`; numerical rank counts `σᵢ > rank_tol·σ₁`.
pub fn orthonormalize(a: &DMatrix<f64>, rank_tol: f64) -> Result<OrthonormalBasis> {
    ensure_finite(a, "matrix")?;
    if !(rank_tol >= 0.0 && rank_tol.is_finite()) {
        return Err(invalid(format!(
            "rank tolerance must be finite and ≥ 0, got {rank_tol}"
        )));
    }
    if a.ncols() == 0 {
        return Ok(OrthonormalBasis::empty(a.nrows()));
    }
    let svd = thin_svd(a);
    let sigma1 = svd.values.first().copied().unwrap_or(0.0);
    let rank = svd
        .values
        .iter()
        .take_while(|&&s| s > 0.0 && s > rank_tol * sigma1)
        .count();
    Ok(OrthonormalBasis::from_columns_unchecked(
        svd.left.columns(0, rank).into_owned(),
    ))
}

/// Cosines of the principal angles between `col(U1)` and `col(U2)`, descending.
///
/// These are the singular values of `U1ᵀU2`, which coincide with the nonzero
/// singular values of `P₁P₂`. Returns `min(r1, r2)` values clamped to `[0, 1]`.
pub fn principal_spectrum(u1: &OrthonormalBasis, u2: &OrthonormalBasis) -> Result<Vec<f64>> {
    let g = u1.cross_gram(u2)?;
    if u1.rank() == 0 || u2.rank() == 0 {
        return Ok(Vec::new());
    }
    Ok(singular_values(&g)
        .into_iter()
        .map(|s| s.clamp(0.0, 1.0))
        .collect())
}

/// Spectral norm of `P₁ − P₂`, i.e. the sine of the largest principal angle.
/// Subspaces of different dimension are at distance 1.
pub fn subspace_distance(u1: &OrthonormalBasis, u2: &OrthonormalBasis) -> Result<f64> {
    same_ambient(u1, u2)?;
    if u1.rank() != u2.rank() {
        return Ok(1.0);
    }
    if u1.rank() == 0 {
        return Ok(0.0);
    }
    // ‖(I − P₁)U₂‖₂ rather than √(1 − cos²), which cancels near zero.
    Ok(spectral_norm(&u1.residual(u2.columns())).min(1.0))
}

/// Orthonormal frame `W` (`n x d`) whose span contains every basis handed to
/// [`ReducedFrame::spanning`]. Projector algebra on those subspaces runs on the
/// `d x d` matrices `Wᵀ P W`.
#[derive(Clone, Debug)]
pub(crate) struct ReducedFrame {
    w: DMatrix<f64>,
}

impl ReducedFrame {
    pub(crate) fn spanning(bases: &[&OrthonormalBasis]) -> Result<Self> {
        let n = bases
            .first()
            .map(|b| b.ambient_dim())
            .ok_or_else(|| invalid("reduced frame needs at least one basis"))?;
        let total: usize = bases.iter().map(|b| b.rank()).sum();
        let mut stacked = DMatrix::zeros(n, total);
        let mut at = 0;
        for b in bases {
            same_ambient(bases[0], b)?;
            stacked.columns_mut(at, b.rank()).copy_from(b.columns());
            at += b.rank();
        }
        // Every left singular vector is kept, including those of zero singular values.
        let svd = thin_svd(&stacked);
        Ok(Self { w: svd.left })
    }

    pub(crate) fn dim(&self) -> usize {
        self.w.ncols()
    }

    /// Coordinates `Wᵀ U` of a basis inside the frame.
    pub(crate) fn coords(&self, b: &OrthonormalBasis) -> DMatrix<f64> {
        self.w.transpose() * b.columns()
    }

    /// `Wᵀ P_U W`.
    pub(crate) fn projector(&self, b: &OrthonormalBasis) -> DMatrix<f64> {
        let c = self.coords(b);
        &c * c.transpose()
    }

    /// Map frame coordinates back to `ℝⁿ`.
    pub(crate) fn lift(&self, coords: &DMatrix<f64>) -> DMatrix<f64> {
        &self.w * coords
    }

    pub(crate) fn identity(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim())
    }
}
