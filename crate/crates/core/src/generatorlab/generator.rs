use super::functions::TestFunction;
use crate::couplers::{Coupler, SWITCH_TIME};
use crate::error::{Error, Result};
use crate::geometry::{check_same_dim, make_frame, Vector};
use crate::montecarlo::par_moments;
use crate::random::{derive_seed, RngStream};

fn joint(x: &Vector, y: &Vector) -> Vec<f64> {
    x.as_slice().iter().chain(y.as_slice()).copied().collect()
}

fn check_arity(f: &dyn TestFunction, x: &Vector, y: &Vector) -> Result<()> {
    check_same_dim(x, y)?;
    if f.arity() != 2 * x.dim() {
        return Err(Error::usage(format!(
            "{} takes {} arguments, the pair lives in R^{}",
            f.name(),
            f.arity(),
            2 * x.dim()
        )));
    }
    Ok(())
}

/// `1/2 Lap f + sum_{i,k} c_{ik} d_{x_i} d_{y_k} f` for a cross-coefficient matrix `c`.
fn second_order(f: &dyn TestFunction, x: &Vector, y: &Vector, cross: impl Fn(usize, usize) -> f64) -> f64 {
    let d = x.dim();
    let h = f.hessian(&joint(x, y));
    let lap: f64 = (0..2 * d).map(|i| h[i][i]).sum();
    let mut mixed = 0.0;
    for i in 0..d {
        for k in 0..d {
            let c = cross(i, k);
            if c != 0.0 {
                mixed += c * h[i][d + k];
            }
        }
    }
    0.5 * lap + mixed
}

/// Generator of the reflection coupling applied to `f` at `(x, y)`:
/// cross coefficients `delta_{ik} - 2 e_i e_k` with `e = (x - y)/|x - y|`,
/// and the identity at `x = y`.
pub fn reflection_generator_apply(f: &dyn TestFunction, x: &Vector, y: &Vector) -> Result<f64> {
    check_arity(f, x, y)?;
    let frame = make_frame(x, y)?;
    Ok(match frame.normal() {
        None => second_order(f, x, y, |i, k| if i == k { 1.0 } else { 0.0 }),
        Some(e) => second_order(f, x, y, |i, k| {
            (if i == k { 1.0 } else { 0.0 }) - 2.0 * e[i] * e[k]
        }),
    })
}

/// Generator of a Brownian coupler at time zero. The switch coupler starts
/// synchronized, so its generator before [`SWITCH_TIME`] is the synchronized one.
pub fn analytic_generator(coupler: &Coupler, f: &dyn TestFunction, x: &Vector, y: &Vector) -> Result<f64> {
    check_arity(f, x, y)?;
    let diag = |sign: f64| move |i: usize, k: usize| if i == k { sign } else { 0.0 };
    match coupler {
        Coupler::Reflection => reflection_generator_apply(f, x, y),
        Coupler::Synchronized | Coupler::Switch => Ok(second_order(f, x, y, diag(1.0))),
        Coupler::Antithetic => Ok(second_order(f, x, y, diag(-1.0))),
        Coupler::SubordinatedReflection(_) => Err(Error::usage(
            "the subordinated coupler has a jump generator; use the Lévy measure tools",
        )),
    }
}

/// Monte Carlo difference quotient at one `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quotient {
    pub t: f64,
    pub value: f64,
    pub std_error: f64,
}

/// Limit `t -> 0` extrapolated from difference quotients.
#[derive(Clone, Debug, PartialEq)]
pub struct Extrapolation {
    pub value: f64,
    /// Monte Carlo and extrapolation errors combined in quadrature.
    pub error: f64,
    pub mc_error: f64,
    pub extrapolation_error: f64,
    pub quotients: Vec<Quotient>,
}

pub(crate) fn check_t_list(t_list: &[f64]) -> Result<()> {
    if t_list.len() < 2 {
        return Err(Error::usage("t_list needs at least two times"));
    }
    if t_list.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::usage("t_list entries must be positive and finite"));
    }
    if t_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::usage("t_list must be strictly decreasing"));
    }
    Ok(())
}

/// Stream seed for the quotient at time `t`; distinct times get independent draws.
pub(crate) fn seed_for_t(seed: u64, t: f64) -> u64 {
    derive_seed(seed, t.to_bits())
}

/// First-order Richardson extrapolation on the two smallest times; the
/// change from the previous pair of times is taken as the extrapolation
/// error.
pub(crate) fn richardson(quotients: Vec<Quotient>) -> Extrapolation {
    let pair = |a: &Quotient, b: &Quotient| {
        let (ca, cb) = (-b.t / (a.t - b.t), a.t / (a.t - b.t));
        let value = ca * a.value + cb * b.value;
        let se = ((ca * a.std_error).powi(2) + (cb * b.std_error).powi(2)).sqrt();
        (value, se)
    };
    let n = quotients.len();
    let (value, mc_error) = pair(&quotients[n - 2], &quotients[n - 1]);
    let extrapolation_error = if n >= 3 {
        (value - pair(&quotients[n - 3], &quotients[n - 2]).0).abs()
    } else {
        0.0
    };
    Extrapolation {
        value,
        error: mc_error.hypot(extrapolation_error),
        mc_error,
        extrapolation_error,
        quotients,
    }
}

/// Estimates the generator of a Brownian coupler from `(E f(pair_t) - f(x, y)) / t`.
///
/// The first-order Taylor term `grad f . (pair_t - (x, y))` has mean zero and
/// is subtracted as a control variate.
pub fn generator_fd_estimate(
    coupler: &Coupler,
    f: &dyn TestFunction,
    x: &Vector,
    y: &Vector,
    t_list: &[f64],
    replicas: u64,
    seed: u64,
) -> Result<Extrapolation> {
    check_arity(f, x, y)?;
    check_t_list(t_list)?;
    if !coupler.is_brownian() {
        return Err(Error::usage("finite-difference generators are defined for Brownian couplers"));
    }
    if replicas < 2 {
        return Err(Error::usage("replicas must be at least 2"));
    }
    if matches!(coupler, Coupler::Switch) && t_list[0] >= SWITCH_TIME {
        return Err(Error::usage("switch coupler quotients need times before the switch"));
    }
    let base = joint(x, y);
    let f0 = f.value(&base);
    let g0 = f.gradient(&base);
    let mut quotients = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let s = seed_for_t(seed, t);
        let m = par_moments(replicas, |i| {
            let pair = coupler
                .pair_at(x, y, t, &mut RngStream::new(s, i))
                .expect("arguments validated");
            let w = joint(pair.first(), pair.second());
            let lin: f64 = w.iter().zip(&base).zip(&g0).map(|((a, b), g)| g * (a - b)).sum();
            (f.value(&w) - f0 - lin) / t
        });
        quotients.push(Quotient {
            t,
            value: m.mean(),
            std_error: m.std_error(),
        });
    }
    Ok(richardson(quotients))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generatorlab::functions::{Bilinear, CrossBump, GaussianBump};

    fn v(c: &[f64]) -> Vector {
        Vector::from(c.to_vec())
    }

    #[test]
    fn bilinear_generators_in_one_dimension() {
        let f = Bilinear { dim: 1 };
        let (x, y) = (v(&[1.0]), v(&[-1.0]));
        assert_eq!(reflection_generator_apply(&f, &x, &y).unwrap(), -1.0);
        assert_eq!(analytic_generator(&Coupler::Synchronized, &f, &x, &y).unwrap(), 1.0);
        assert_eq!(analytic_generator(&Coupler::Antithetic, &f, &x, &y).unwrap(), -1.0);
        // At x = y the coefficients are the identity.
        assert_eq!(reflection_generator_apply(&f, &x, &x).unwrap(), 1.0);
    }

    #[test]
    fn reflection_cross_term_in_two_dimensions() {
        // e = (1, 0): coefficients diag(-1, 1), so <x, y> gives -1 + 1 = 0.
        let f = Bilinear { dim: 2 };
        let g = reflection_generator_apply(&f, &v(&[1.0, 0.0]), &v(&[-1.0, 0.0])).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn t_list_must_decrease() {
        let f = Bilinear { dim: 1 };
        let (x, y) = (v(&[1.0]), v(&[-1.0]));
        assert!(generator_fd_estimate(&Coupler::Reflection, &f, &x, &y, &[0.01, 0.02], 100, 1).is_err());
        assert!(generator_fd_estimate(&Coupler::Reflection, &f, &x, &y, &[0.02], 100, 1).is_err());
    }

    #[test]
    fn richardson_removes_linear_bias() {
        let q = |t: f64| Quotient { t, value: 3.0 + 5.0 * t, std_error: 0.0 };
        let e = richardson(vec![q(0.04), q(0.02), q(0.01)]);
        assert!((e.value - 3.0).abs() < 1e-12 && e.extrapolation_error < 1e-12);
    }

    #[test]
    fn estimates_match_operators() {
        let (x, y) = (v(&[0.4]), v(&[-0.7]));
        let fs: Vec<Box<dyn TestFunction>> = vec![
            Box::new(CrossBump { dim: 1, width: 1.5 }),
            Box::new(GaussianBump { centre: vec![0.1, -0.3], width: 0.9 }),
        ];
        for f in &fs {
            for c in [Coupler::Synchronized, Coupler::Antithetic, Coupler::Reflection] {
                let est = generator_fd_estimate(&c, f.as_ref(), &x, &y, &[0.04, 0.02, 0.01], 200_000, 3).unwrap();
                let exact = analytic_generator(&c, f.as_ref(), &x, &y).unwrap();
                assert!((est.value - exact).abs() < 3.0 * est.error, "{} {}: {est:?} vs {exact}", f.name(), c.name());
            }
        }
    }
}
