//! Seeded randomness: derived seeds, Gaussian matrices and Haar-distributed bases.
//!
//! Every random draw in the crate goes through a [`ChaCha8Rng`] seeded from a
//! `u64`. Independent streams (bootstrap replicates, benchmark cells) get their
//! own seed from [`derive_seed`], so parallel and serial runs agree bit for bit.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::OrthonormalBasis;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a path of stream indices.
///
/// Distinct paths give statistically independent seeds; the mapping is a pure
/// function, so the same `(master, path)` always yields the same child.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(master);
    for &p in path {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(0xD1B5_4A32_D192_ED03)));
    }
    h
}

pub fn gaussian_matrix(rows: usize, cols: usize, sd: f64, rng: &mut Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        sd * z
    })
}

/// Haar-distributed `n x r` orthonormal basis: Gaussian matrix, thin QR, and a
/// sign fix making diag(R) positive.
pub fn haar_basis(n: usize, r: usize, rng: &mut Rng) -> OrthonormalBasis {
    assert!(r <= n, "haar_basis: rank {r} exceeds dimension {n}");
    if r == 0 {
        return OrthonormalBasis::empty(n);
    }
    let g = gaussian_matrix(n, r, 1.0, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let rdiag = qr.r().diagonal();
    for (j, d) in rdiag.iter().enumerate() {
        if *d < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    OrthonormalBasis::from_columns_unchecked(q)
}

/// FNV-1a over the bit patterns of the entries; used to order views canonically.
pub(crate) fn fingerprint(m: &DMatrix<f64>) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for v in m.iter() {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
    }
    h ^ ((m.nrows() as u64) << 32) ^ (m.ncols() as u64)
}
