//! Asymptotic spectrum of the product of two independent random projections.
//!
//! For Haar subspaces of `ℝⁿ` with dimension ratios `q1 = r1/n`, `q2 = r2/n`,
//! the squared singular values `λ` of `P₁P₂` have a continuous density
//!
//! ```text
//! f(λ) = √((λ₊ − λ)(λ − λ₋)) / (2πλ(1 − λ)),
//! λ± = q1 + q2 − 2q1q2 ± 2√(q1q2(1 − q1)(1 − q2)),
//! ```
//!
//! plus point masses `A₀ = 1 − min(q1, q2)` at zero and
//! `A₁ = max(q1 + q2 − 1, 0)` at one. `√λ₊` is the largest singular value
//! reachable by chance alignment and serves as the noise-filtering threshold.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::principal_spectrum;
use crate::quadrature::integrate;
use crate::random::{haar_basis, rng_from_seed};

const PANELS: usize = 48;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpectrumLaw {
    pub q1: f64,
    pub q2: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub mass_at_zero: f64,
    pub mass_at_one: f64,
}

pub fn noise_law(q1: f64, q2: f64) -> Result<NoiseSpectrumLaw> {
    for (name, q) in [("q1", q1), ("q2", q2)] {
        if !(0.0..=1.0).contains(&q) {
            return Err(invalid(format!("{name} must lie in [0, 1], got {q}")));
        }
    }
    let (lo, hi) = (q1.min(q2), q1.max(q2));
    let (lambda_minus, lambda_plus) = if lo == 0.0 {
        // One projection is zero: every singular value vanishes.
        (0.0, 0.0)
    } else if hi == 1.0 {
        // One projection is the identity: the spectrum is {0, 1} only.
        (1.0, 1.0)
    } else {
        let centre = lo + hi - 2.0 * lo * hi;
        let spread = 2.0 * (lo * hi * (1.0 - lo) * (1.0 - hi)).sqrt();
        (
            (centre - spread).clamp(0.0, 1.0),
            (centre + spread).clamp(0.0, 1.0),
        )
    };
    Ok(NoiseSpectrumLaw {
        q1,
        q2,
        lambda_minus,
        lambda_plus,
        mass_at_zero: 1.0 - lo,
        mass_at_one: (q1 + q2 - 1.0).max(0.0),
    })
}

/// Continuous density `f(λ)`; zero outside the open support `(λ₋, λ₊)`.
pub fn noise_density(law: &NoiseSpectrumLaw, lambda: f64) -> f64 {
    law.density(lambda)
}

/// `√λ₊`, the noise threshold on the singular-value scale.
pub fn singular_value_threshold(law: &NoiseSpectrumLaw) -> f64 {
    law.lambda_plus.sqrt()
}

impl NoiseSpectrumLaw {
    pub fn density(&self, lambda: f64) -> f64 {
        if !(lambda > self.lambda_minus && lambda < self.lambda_plus)
            || lambda <= 0.0
            || lambda >= 1.0
        {
            return 0.0;
        }
        let num = ((self.lambda_plus - lambda) * (lambda - self.lambda_minus)).sqrt();
        num / (2.0 * std::f64::consts::PI * lambda * (1.0 - lambda))
    }

    /// Density of `s = √λ`: `g(s) = 2s·f(s²)`.
    pub fn singular_value_density(&self, s: f64) -> f64 {
        2.0 * s * self.density(s * s)
    }

    fn half_width(&self) -> f64 {
        0.5 * (self.lambda_plus - self.lambda_minus)
    }

    /// Integrand after `λ = λ₋ + c(1 − cos t)`; bounded even when an edge sits at 0 or 1.
    fn substituted(&self, t: f64) -> f64 {
        let c = self.half_width();
        let lambda = self.lambda_minus + c * (1.0 - t.cos());
        let s = t.sin();
        c * c * s * s / (2.0 * std::f64::consts::PI * lambda * (1.0 - lambda))
    }

    fn angle_of(&self, lambda: f64) -> f64 {
        let c = self.half_width();
        (1.0 - (lambda - self.lambda_minus) / c)
            .clamp(-1.0, 1.0)
            .acos()
    }

    /// Mass of the continuous part, `∫ f`. Equals `1 − A₀ − A₁` in exact arithmetic.
    pub fn continuous_mass(&self) -> f64 {
        if self.half_width() <= 0.0 {
            return 0.0;
        }
        integrate(|t| self.substituted(t), 0.0, std::f64::consts::PI, PANELS)
    }

    /// `∫_{λ₋}^{λ} f`, unnormalised.
    pub fn continuous_integral(&self, lambda: f64) -> f64 {
        if self.half_width() <= 0.0 || lambda <= self.lambda_minus {
            return 0.0;
        }
        if lambda >= self.lambda_plus {
            return self.continuous_mass();
        }
        let t = self.angle_of(lambda);
        let panels = ((t / std::f64::consts::PI) * PANELS as f64).ceil().max(1.0) as usize;
        integrate(|u| self.substituted(u), 0.0, t, panels)
    }

    /// CDF of the continuous part normalised to a probability distribution.
    pub fn continuous_cdf(&self, lambda: f64) -> f64 {
        let total = self.continuous_mass();
        if total <= 0.0 {
            return if lambda >= self.lambda_plus { 1.0 } else { 0.0 };
        }
        (self.continuous_integral(lambda) / total).clamp(0.0, 1.0)
    }

    /// `count` evenly spaced `(λ, f(λ))` pairs across `[λ₋, λ₊]`.
    pub fn density_samples(&self, count: usize) -> Vec<[f64; 2]> {
        let count = count.max(2);
        (0..count)
            .map(|i| {
                let l = self.lambda_minus
                    + (self.lambda_plus - self.lambda_minus) * i as f64 / (count - 1) as f64;
                [l, self.density(l)]
            })
            .collect()
    }
}

/// Squared singular values of `U₁ᵀU₂` for independent Haar bases of ranks `r1`, `r2`
/// in `ℝⁿ`, descending. Deterministic given `seed`.
pub fn sample_noise_spectrum(n: usize, r1: usize, r2: usize, seed: u64) -> Result<Vec<f64>> {
    if r1 > n || r2 > n {
        return Err(invalid(format!("ranks ({r1}, {r2}) exceed dimension {n}")));
    }
    let mut rng = rng_from_seed(seed);
    let u1 = haar_basis(n, r1, &mut rng);
    let u2 = haar_basis(n, r2, &mut rng);
    Ok(principal_spectrum(&u1, &u2)?
        .into_iter()
        .map(|s| s * s)
        .collect())
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    if sample.is_empty() {
        return 0.0;
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max)
}
