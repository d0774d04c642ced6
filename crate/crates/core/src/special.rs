//! Special functions. Error functions come from `libm`, which is accurate to
//! an ulp or two; the `statrs` versions drift by ~1e-11 near the centre.

use statrs::distribution::{ContinuousCDF, Normal};

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `2 Phi(z) - 1 = erf(z / sqrt 2)`, accurate for small `z`.
#[inline]
pub fn two_phi_minus_one(z: f64) -> f64 {
    libm::erf(z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn norm_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Centred normal density with variance `var`.
#[inline]
pub fn gauss_density(z: f64, var: f64) -> f64 {
    (-0.5 * z * z / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

pub use statrs::function::gamma::{gamma, ln_gamma};
