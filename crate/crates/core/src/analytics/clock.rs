//! Expectations over the law of the subordinator value `S_t`.

use std::f64::consts::PI;

use crate::error::Result;
use crate::quadrature::{integrate, integrate_est, integrate_to_inf, Estimate, Tolerance};
use crate::random::{JumpFamily, JumpLaw, SubordinatorSpec};
use crate::special::{gauss_density, ln_gamma};

pub(crate) const INNER_TOL: Tolerance = Tolerance {
    abs: 1e-13,
    rel: 1e-11,
    max_intervals: 4000,
};

// Outer level of the two-dimensional stable integral; inner errors add up.
pub(crate) const STABLE_OUTER_TOL: Tolerance = Tolerance {
    abs: 1e-12,
    rel: 1e-9,
    max_intervals: 1000,
};

/// `E[g(S_t); S_t > 0]` by quadrature against the law of `S_t`.
///
/// * drift only: `S_t = b t`;
/// * stable, `alpha = 1/2`: `S_t = b t + c^2 / (2 Z^2)` integrated over `Z`;
/// * stable, other `alpha`: Kanter's representation
///   `S_t = b t + c^{1/alpha} (A(u) / w)^{(1-alpha)/alpha}` integrated over
///   `u` uniform on `(0, pi)` and `w` standard exponential;
/// * gamma: gamma density;
/// * compound Poisson: series over the number of jumps.
pub fn clock_expectation<G>(spec: &SubordinatorSpec, t: f64, g: G) -> Result<Estimate>
where
    G: Fn(f64) -> f64,
{
    let shift = spec.drift() * t;
    let scale = spec.scale();
    match spec.family() {
        JumpFamily::None => Ok(Estimate::exact(g(shift))),
        JumpFamily::Stable { alpha: 0.5 } => {
            let c = scale * t;
            let half_c2 = 0.5 * c * c;
            integrate_to_inf(
                |z| {
                    if z == 0.0 {
                        return 0.0;
                    }
                    2.0 * g(shift + half_c2 / (z * z)) * gauss_density(z, 1.0)
                },
                0.0,
                INNER_TOL,
            )
        }
        JumpFamily::Stable { alpha } => {
            let c = (scale * t).powf(1.0 / alpha);
            let expo = (1.0 - alpha) / alpha;
            let a_of = |u: f64| {
                (alpha * u).sin().powf(alpha / (1.0 - alpha)) * ((1.0 - alpha) * u).sin()
                    / u.sin().powf(1.0 / (1.0 - alpha))
            };
            let outer = integrate_est(
                |u| {
                    let a = a_of(u);
                    if !a.is_finite() || a <= 0.0 {
                        return Estimate::exact(0.0);
                    }
                    integrate_to_inf(
                        |w| {
                            if w == 0.0 {
                                return 0.0;
                            }
                            let s = shift + c * (a / w).powf(expo);
                            (-w).exp() * g(s)
                        },
                        0.0,
                        INNER_TOL,
                    )
                    .unwrap_or(Estimate::new(f64::NAN, f64::NAN))
                },
                0.0,
                PI,
                STABLE_OUTER_TOL,
            )?;
            Ok(outer.scale(1.0 / PI))
        }
        JumpFamily::Gamma { shape, rate } => gamma_expectation(shape * scale * t, rate, shift, &g),
        JumpFamily::CompoundPoisson { rate, jump } => {
            let mean = scale * rate * t;
            let mut total = Estimate::exact(0.0);
            let mut log_p = -mean;
            if shift > 0.0 {
                total = total + Estimate::exact(log_p.exp() * g(shift));
            }
            let mut max_g: f64 = 0.0;
            let mut n = 0u64;
            let max_terms = (mean + 40.0 * mean.sqrt() + 200.0) as u64;
            while n < max_terms {
                n += 1;
                log_p += mean.ln() - (n as f64).ln();
                let p = log_p.exp();
                let term = match jump {
                    JumpLaw::Exponential { rate } => gamma_expectation(n as f64, rate, shift, &g)?,
                    JumpLaw::Gamma { shape, rate } => {
                        gamma_expectation(shape * n as f64, rate, shift, &g)?
                    }
                    JumpLaw::Fixed { size } => Estimate::exact(g(shift + size * n as f64)),
                };
                max_g = max_g.max(term.value.abs());
                total = total + term.scale(p);
                // Past the mode the terms fall geometrically with ratio mean / (n + 1).
                if n as f64 > 2.0 * mean && p < 1e-17 {
                    break;
                }
            }
            let ratio = mean / (n as f64 + 1.0);
            let tail = (log_p.exp() * ratio / (1.0 - ratio)).max(0.0);
            Ok(Estimate::new(total.value, total.error + tail * max_g))
        }
    }
}

/// `E[g(shift + G)]` for `G ~ Gamma(shape, rate)`.
fn gamma_expectation<G: Fn(f64) -> f64>(shape: f64, rate: f64, shift: f64, g: &G) -> Result<Estimate> {
    if shape < 1.0 {
        // j = y^{1/shape} removes the j^{shape-1} singularity:
        // E = rate^shape / Gamma(shape + 1) * int_0^inf g(shift + y^{1/shape}) e^{-rate y^{1/shape}} dy.
        let log_norm = shape * rate.ln() - ln_gamma(shape + 1.0);
        // y scale: the mass sits around y ~ (1/rate)^shape.
        let y_scale = rate.powf(-shape);
        let r = integrate_to_inf(
            |v| {
                let y = v * y_scale;
                let j = y.powf(1.0 / shape);
                if !j.is_finite() {
                    return 0.0;
                }
                g(shift + j) * (-rate * j + log_norm).exp() * y_scale
            },
            0.0,
            INNER_TOL,
        )?;
        return Ok(r);
    }
    let log_norm = shape * rate.ln() - ln_gamma(shape);
    let density = |j: f64| {
        if j <= 0.0 {
            return 0.0;
        }
        ((shape - 1.0) * j.ln() - rate * j + log_norm).exp()
    };
    let mode = (shape - 1.0) / rate;
    let sd = shape.sqrt() / rate;
    let left_end = (mode - 8.0 * sd).max(0.0);
    let right_start = mode + 8.0 * sd;
    let mut total = integrate(|j| g(shift + j) * density(j), left_end, right_start, INNER_TOL)?;
    if left_end > 0.0 {
        total = total + integrate(|j| g(shift + j) * density(j), 0.0, left_end, INNER_TOL)?;
    }
    total = total + integrate_to_inf(|j| g(shift + j) * density(j), right_start, INNER_TOL)?;
    Ok(total)
}
