use std::f64::consts::PI;

use super::clock::clock_expectation;
use crate::couplers::Coupler;
use crate::error::{Error, Result};
use crate::geometry::{check_same_dim, Vector};
use crate::quadrature::{integrate, integrate_est, Estimate, Tolerance};
use crate::random::SubordinatorSpec;
use crate::special::{gauss_density, two_phi_minus_one};

pub(crate) const OUTER_TOL: Tolerance = Tolerance {
    abs: 1e-11,
    rel: 1e-10,
    max_intervals: 2000,
};

/// Total variation between `N(x, t I)` and `N(y, t I)`: `2 Phi(|x-y| / (2 sqrt t)) - 1`.
pub fn tv_gaussian(x: &Vector, y: &Vector, t: f64) -> Result<f64> {
    check_same_dim(x, y)?;
    check_positive(t, "t")?;
    Ok(tv_gaussian_distance(x.distance(y), t))
}

pub(crate) fn tv_gaussian_distance(distance: f64, t: f64) -> f64 {
    if distance == 0.0 {
        return 0.0;
    }
    two_phi_minus_one(distance / (2.0 * t.sqrt()))
}

fn check_positive(v: f64, name: &str) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::usage(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

/// One-dimensional marginal density of subordinated Brownian motion at
/// distance `r`: `E[(2 pi S_t)^{-1/2} exp(-r^2 / (2 S_t)); S_t > 0]`.
fn marginal_density(spec: &SubordinatorSpec, t: f64, r: f64) -> Result<Estimate> {
    clock_expectation(spec, t, |s| gauss_density(r, s))
}

/// Radial profile `p_t(r)` of the transition density of subordinated
/// Brownian motion in `R^dim`, as used in the mismatch formula:
/// `(2 pi)^{-(d-1)/2}` times the one-dimensional marginal density at `r`.
pub fn radial_transition_density(spec: &SubordinatorSpec, t: f64, r: f64, dim: usize) -> Result<Estimate> {
    check_positive(t, "t")?;
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::usage(format!("radius must be nonnegative, got {r}")));
    }
    if dim == 0 {
        return Err(Error::usage("dimension must be positive"));
    }
    let factor = (2.0 * PI).powf(-0.5 * (dim as f64 - 1.0));
    Ok(marginal_density(spec, t, r)?.scale(factor))
}

/// Total variation between the laws of `x + B_{S_t}` and `y + B_{S_t}`:
/// the atom of `S_t` at zero plus twice the marginal density integrated
/// over `[0, |x-y|/2]`.
pub fn tv_subordinated(x: &Vector, y: &Vector, t: f64, spec: &SubordinatorSpec) -> Result<Estimate> {
    check_same_dim(x, y)?;
    check_positive(t, "t")?;
    tv_subordinated_distance(x.distance(y), t, spec)
}

pub(crate) fn tv_subordinated_distance(distance: f64, t: f64, spec: &SubordinatorSpec) -> Result<Estimate> {
    if distance == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    let continuous = integrate_est(
        |r| marginal_density(spec, t, r).unwrap_or(Estimate::new(f64::NAN, f64::NAN)),
        0.0,
        0.5 * distance,
        OUTER_TOL,
    )?;
    Ok(Estimate::exact(spec.atom_at_zero(t)) + continuous.scale(2.0))
}

/// The same total variation computed as a mixture of Gaussian total
/// variations over the clock: `P(S_t = 0) + E[2 Phi(D / (2 sqrt S_t)) - 1; S_t > 0]`.
pub fn tv_subordinated_mixture(distance: f64, t: f64, spec: &SubordinatorSpec) -> Result<Estimate> {
    check_positive(t, "t")?;
    if distance == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    let mix = clock_expectation(spec, t, |s| two_phi_minus_one(distance / (2.0 * s.sqrt())))?;
    Ok(Estimate::exact(spec.atom_at_zero(t)) + mix)
}

/// Marginal law of a coupler's legs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Law {
    Brownian,
    Subordinated(SubordinatorSpec),
}

impl Law {
    pub fn of_coupler(coupler: &Coupler) -> Law {
        match coupler {
            Coupler::SubordinatedReflection(spec) => Law::Subordinated(*spec),
            _ => Law::Brownian,
        }
    }

    /// Total variation at time `t` between the laws started at distance `distance`.
    pub fn tv(&self, distance: f64, t: f64) -> Result<Estimate> {
        check_positive(t, "t")?;
        match self {
            Law::Brownian => Ok(Estimate::exact(tv_gaussian_distance(distance, t))),
            Law::Subordinated(spec) => tv_subordinated_distance(distance, t, spec),
        }
    }

    /// `d TV / d D` at distance `distance`: the marginal density at `D/2`.
    fn tv_slope(&self, distance: f64, t: f64) -> Result<f64> {
        Ok(match self {
            Law::Brownian => gauss_density(0.5 * distance, t),
            Law::Subordinated(spec) => marginal_density(spec, t, 0.5 * distance)?.value,
        })
    }
}

/// `D -> TV(t, D)` tabulated for fast repeated evaluation.
///
/// Nodes are uniform in `u = D / (D + c)`; values are accumulated interval
/// by interval from the marginal density and interpolated by cubic Hermite
/// polynomials using the exact slope. Distances past the last node are
/// evaluated directly.
#[derive(Clone, Debug)]
pub struct TvCurve {
    law: Law,
    t: f64,
    c: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    step: f64,
    error: f64,
}

pub(crate) const CURVE_NODES: usize = 1024;
pub(crate) const CURVE_U_MAX: f64 = 0.999;

impl TvCurve {
    pub fn new(law: Law, t: f64, length_scale: f64) -> Result<Self> {
        check_positive(t, "t")?;
        check_positive(length_scale, "length scale")?;
        let c = length_scale;
        let step = CURVE_U_MAX / (CURVE_NODES - 1) as f64;
        let dist = |k: usize| {
            let u = k as f64 * step;
            c * u / (1.0 - u)
        };
        let atom = match law {
            Law::Brownian => 0.0,
            Law::Subordinated(spec) => spec.atom_at_zero(t),
        };
        let mut values = Vec::with_capacity(CURVE_NODES);
        let mut slopes = Vec::with_capacity(CURVE_NODES);
        let mut acc = Estimate::exact(0.0);
        for k in 0..CURVE_NODES {
            let d = dist(k);
            if k > 0 {
                let piece = match law {
                    Law::Brownian => Estimate::exact(
                        tv_gaussian_distance(d, t) - tv_gaussian_distance(dist(k - 1), t),
                    ),
                    Law::Subordinated(spec) => integrate_est(
                        |r| marginal_density(&spec, t, r).unwrap_or(Estimate::new(f64::NAN, f64::NAN)),
                        0.5 * dist(k - 1),
                        0.5 * d,
                        OUTER_TOL,
                    )?
                    .scale(2.0),
                };
                acc = acc + piece;
            }
            // The atom only enters once the points differ.
            values.push(if k == 0 { 0.0 } else { atom + acc.value });
            let u = k as f64 * step;
            let du = c / ((1.0 - u) * (1.0 - u));
            slopes.push(law.tv_slope(d, t)? * du);
        }
        let mut curve = TvCurve {
            law,
            t,
            c,
            values,
            slopes,
            step,
            error: acc.error,
        };
        // Interpolation check at interior midpoints against direct values.
        let mut worst: f64 = 0.0;
        for k in (0..CURVE_NODES - 1).step_by(97) {
            let u = (k as f64 + 0.5) * step;
            let d = c * u / (1.0 - u);
            let direct = law.tv(d, t)?;
            worst = worst.max((curve.eval(d)? - direct.value).abs() - direct.error);
        }
        curve.error += worst.max(0.0);
        Ok(curve)
    }

    /// Bound on the tabulation error observed during construction.
    pub fn error(&self) -> f64 {
        self.error
    }

    pub fn eval(&self, distance: f64) -> Result<f64> {
        if distance == 0.0 {
            return Ok(0.0);
        }
        let u = distance / (distance + self.c);
        if u >= CURVE_U_MAX {
            return Ok(self.law.tv(distance, self.t)?.value);
        }
        let pos = u / self.step;
        let k = (pos.floor() as usize).min(CURVE_NODES - 2);
        let s = pos - k as f64;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        // Node 0 carries no atom; approach it continuously from the right.
        let v0 = if k == 0 {
            match self.law {
                Law::Subordinated(spec) => spec.atom_at_zero(self.t),
                Law::Brownian => 0.0,
            }
        } else {
            self.values[k]
        };
        Ok(h00 * v0 + h10 * self.step * self.slopes[k] + h01 * self.values[k + 1] + h11 * self.step * self.slopes[k + 1])
    }
}

/// Positive part of the difference of two one-dimensional densities,
/// integrated over the line. Used as an independent route to total variation.
pub fn positive_part_mass<F, G>(f: F, g: G, split: f64, scale: f64) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let h = |z: f64| (f(z) - g(z)).max(0.0);
    let tol = Tolerance::new(1e-13, 1e-12);
    let span = 60.0 * scale;
    let mut total = integrate(&h, split - span, split, tol)?;
    total = total + integrate(&h, split, split + span, tol)?;
    Ok(total)
}
