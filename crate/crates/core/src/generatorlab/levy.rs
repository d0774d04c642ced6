use std::f64::consts::PI;

use super::functions::TestFunction;
use super::generator::{check_t_list, richardson, seed_for_t, Extrapolation, Quotient};
use crate::couplers::{normal_vector, subordinated_reflection_pair_at};
use crate::error::{Error, Result};
use crate::geometry::{check_same_dim, make_frame, Vector};
use crate::montecarlo::par_moments;
use crate::quadrature::{integrate_est, integrate_to_inf_est, Estimate, Tolerance};
use crate::random::{LevyMeasureKind, RngStream, SubordinatorSpec};

pub(crate) const DENSITY_TOL: Tolerance = Tolerance {
    abs: 1e-300,
    rel: 1e-11,
    max_intervals: 2000,
};

/// Lévy density of `B_{S_t}` at `z`: `int_0^inf (2 pi s)^{-d/2} exp(-|z|^2/(2s)) nu(ds)`.
pub fn subordinated_levy_density(spec: &SubordinatorSpec, z: &Vector) -> Result<Estimate> {
    let r = z.norm();
    if r == 0.0 {
        return Err(Error::usage("the Lévy density diverges at the origin"));
    }
    levy_density_radial(spec, r, z.dim())
}

/// Radial form of [`subordinated_levy_density`].
pub fn levy_density_radial(spec: &SubordinatorSpec, r: f64, dim: usize) -> Result<Estimate> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::usage(format!("radius must be positive and finite, got {r}")));
    }
    if dim == 0 {
        return Err(Error::usage("dimension must be positive"));
    }
    let half_d = 0.5 * dim as f64;
    match spec.levy_measure_kind() {
        LevyMeasureKind::Zero => Ok(Estimate::exact(0.0)),
        LevyMeasureKind::Atom { size, mass } => Ok(Estimate::exact(
            mass * (-(half_d) * (2.0 * PI * size).ln() - 0.5 * r * r / size).exp(),
        )),
        LevyMeasureKind::Density => {
            // Over v = ln s the integrand is smooth and decays on both sides.
            let integrand = |v: f64| {
                let s = v.exp();
                if s == 0.0 || !s.is_finite() {
                    return Estimate::exact(0.0);
                }
                let kernel = v - half_d * (2.0 * PI * s).ln() - 0.5 * r * r / s;
                let nu = spec.levy_density(s);
                // An infinite nu only occurs for s so small that the kernel is negligible.
                if nu <= 0.0 || !nu.is_finite() || kernel == f64::NEG_INFINITY {
                    return Estimate::exact(0.0);
                }
                Estimate::exact((kernel + nu.ln()).exp())
            };
            real_line_est(integrand, (r * r / dim as f64).ln(), DENSITY_TOL)
        }
    }
}

fn real_line_est<F: FnMut(f64) -> Estimate>(mut f: F, centre: f64, tol: Tolerance) -> Result<Estimate> {
    let right = integrate_to_inf_est(&mut f, centre, tol)?;
    let left = integrate_to_inf_est(|x| f(2.0 * centre - x), centre, tol)?;
    Ok(left + right)
}

/// `r -> n(r)` tabulated on a logarithmic grid and interpolated by cubics
/// in log-log coordinates, with power-law extrapolation past the ends.
#[derive(Clone, Debug)]
pub(crate) struct LevyTable {
    kind: LevyMeasureKind,
    dim: usize,
    log_r0: f64,
    step: f64,
    log_n: Vec<f64>,
    /// Largest relative interpolation error seen at cell midpoints.
    rel_error: f64,
}

pub(crate) const TABLE_NODES: usize = 3000;

impl LevyTable {
    pub(crate) fn new(spec: &SubordinatorSpec, dim: usize, length: f64) -> Result<Self> {
        let kind = spec.levy_measure_kind();
        let (lo, hi) = ((1e-6 * length).ln(), (1e4 * length).ln());
        let step = (hi - lo) / (TABLE_NODES - 1) as f64;
        let mut log_n = Vec::new();
        let mut rel_error: f64 = 0.0;
        if kind == LevyMeasureKind::Density {
            log_n = (0..TABLE_NODES)
                .map(|k| Ok(levy_density_radial(spec, (lo + k as f64 * step).exp(), dim)?.value.ln()))
                .collect::<Result<Vec<f64>>>()?;
            let mut table = LevyTable { kind, dim, log_r0: lo, step, log_n, rel_error: 0.0 };
            for k in (0..TABLE_NODES - 1).step_by(37) {
                let r = (lo + (k as f64 + 0.5) * step).exp();
                let direct = levy_density_radial(spec, r, dim)?.value;
                if direct > 1e-250 {
                    rel_error = rel_error.max((table.eval(r) / direct - 1.0).abs());
                }
            }
            table.rel_error = rel_error;
            return Ok(table);
        }
        Ok(LevyTable { kind, dim, log_r0: lo, step, log_n, rel_error })
    }

    pub(crate) fn rel_error(&self) -> f64 {
        self.rel_error
    }

    pub(crate) fn eval(&self, r: f64) -> f64 {
        match self.kind {
            LevyMeasureKind::Zero => 0.0,
            LevyMeasureKind::Atom { size, mass } => {
                mass * (-(0.5 * self.dim as f64) * (2.0 * PI * size).ln() - 0.5 * r * r / size).exp()
            }
            LevyMeasureKind::Density => {
                if r <= 0.0 {
                    return f64::INFINITY;
                }
                let pos = (r.ln() - self.log_r0) / self.step;
                let last = TABLE_NODES - 1;
                let (k, s) = if pos < 0.0 {
                    (0, pos)
                } else if pos >= last as f64 {
                    (last - 1, pos - (last - 1) as f64)
                } else {
                    let k = pos.floor() as usize;
                    (k, pos - k as f64)
                };
                if pos < 0.0 || pos >= last as f64 {
                    let (a, b) = (self.log_n[k], self.log_n[k + 1]);
                    if !b.is_finite() {
                        return 0.0;
                    }
                    return (a + s * (b - a)).exp();
                }
                // Cubic Lagrange on the four surrounding nodes.
                let j = k.clamp(1, last - 2) - 1;
                let p = pos - j as f64;
                let ys = &self.log_n[j..j + 4];
                if ys.iter().any(|y| !y.is_finite()) {
                    let (a, b) = (self.log_n[k], self.log_n[k + 1]);
                    return if b.is_finite() { (a + s * (b - a)).exp() } else { 0.0 };
                }
                let l0 = -(p - 1.0) * (p - 2.0) * (p - 3.0) / 6.0;
                let l1 = p * (p - 2.0) * (p - 3.0) / 2.0;
                let l2 = -p * (p - 1.0) * (p - 3.0) / 2.0;
                let l3 = p * (p - 1.0) * (p - 2.0) / 6.0;
                (l0 * ys[0] + l1 * ys[1] + l2 * ys[2] + l3 * ys[3]).exp()
            }
        }
    }
}

/// Growth gate for integrals against a Lévy measure: `f` must vanish at the
/// origin faster than `|w|^2`.
pub(crate) fn check_levy_integrable(f: &dyn TestFunction) -> Result<()> {
    let order = f.near_origin_order();
    if !(order > 2.0) {
        return Err(Error::usage(format!(
            "{} has near-origin order {order}; integrating against a Lévy measure needs order > 2",
            f.name()
        )));
    }
    let origin = vec![0.0; f.arity()];
    if f.value(&origin) != 0.0 {
        return Err(Error::usage(format!("{} does not vanish at the origin", f.name())));
    }
    Ok(())
}

pub(crate) const OUTER_TOL: Tolerance = Tolerance {
    abs: 1e-11,
    rel: 1e-9,
    max_intervals: 2000,
};
pub(crate) const INNER_TOL: Tolerance = Tolerance {
    abs: 1e-12,
    rel: 1e-10,
    max_intervals: 2000,
};

/// `int_{R^d} g(c) dc` for `d <= 3`; the first coordinate is split at
/// `breaks`, the others run over the real line.
fn integrate_rd<G: Fn(&[f64]) -> f64>(dim: usize, breaks: &[f64], g: &G) -> Result<Estimate> {
    fn level<G: Fn(&[f64]) -> f64>(coords: &mut Vec<f64>, dim: usize, breaks: &[f64], g: &G) -> Result<Estimate> {
        let depth = coords.len();
        let tol = if depth == 0 { OUTER_TOL } else { INNER_TOL };
        let mut eval = |c: f64| -> Estimate {
            coords.push(c);
            let v = if depth + 1 == dim {
                Estimate::exact(g(coords))
            } else {
                level(coords, dim, breaks, g).unwrap_or(Estimate::new(f64::NAN, f64::NAN))
            };
            coords.pop();
            v
        };
        if depth > 0 {
            return real_line_est(&mut eval, 0.0, tol);
        }
        let mut total = Estimate::exact(0.0);
        let (first, last) = (breaks[0], breaks[breaks.len() - 1]);
        total = total + integrate_to_inf_est(|x| eval(2.0 * first - x), first, tol)?;
        for w in breaks.windows(2) {
            total = total + integrate_est(&mut eval, w[0], w[1], tol)?;
        }
        total = total + integrate_to_inf_est(&mut eval, last, tol)?;
        Ok(total)
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::usage("Lévy integrals are implemented for d <= 3"));
    }
    let mut sorted = breaks.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    level(&mut Vec::with_capacity(dim), dim, &sorted, g)
}

/// `int f(z) n(z) dz` for the Lévy density of subordinated Brownian motion
/// in `R^d`, `d = f.arity()`.
pub fn levy_integral(spec: &SubordinatorSpec, f: &dyn TestFunction) -> Result<Estimate> {
    check_levy_integrable(f)?;
    let dim = f.arity();
    let table = LevyTable::new(spec, dim, 1.0)?;
    let g = |z: &[f64]| {
        let r = z.iter().map(|c| c * c).sum::<f64>().sqrt();
        if r == 0.0 {
            return 0.0;
        }
        f.value(z) * table.eval(r)
    };
    let est = integrate_rd(dim, &[0.0], &g)?;
    Ok(Estimate::new(est.value, est.error + 2.0 * table.rel_error() * est.value.abs()))
}

/// Orthonormal basis of the complement of the unit vector `e`.
fn complement_basis(e: &Vector) -> Vec<Vector> {
    let d = e.dim();
    let mut basis: Vec<Vector> = Vec::with_capacity(d - 1);
    for k in 0..d {
        if basis.len() == d - 1 {
            break;
        }
        let mut v = Vector::basis(d, k);
        let proj = v.dot(e);
        v = &v - &e.scale(proj);
        for b in &basis {
            let p = v.dot(b);
            v = &v - &b.scale(p);
        }
        let n = v.norm();
        if n > 1e-8 {
            basis.push(v.scale(1.0 / n));
        }
    }
    basis
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Terms {
    Minimum,
    Mirror,
    Both,
}

fn coupled_integral(x: &Vector, y: &Vector, f: &dyn TestFunction, spec: &SubordinatorSpec, which: Terms) -> Result<Estimate> {
    check_same_dim(x, y)?;
    let d = x.dim();
    if f.arity() != 2 * d {
        return Err(Error::usage(format!("{} takes {} arguments, expected {}", f.name(), f.arity(), 2 * d)));
    }
    check_levy_integrable(f)?;
    let frame = make_frame(x, y)?;
    let e = frame.normal().cloned().unwrap_or_else(|| Vector::basis(d, 0));
    let a = frame.half_gap();
    let perp = complement_basis(&e);
    let table = LevyTable::new(spec, d, (2.0 * a).max(1.0))?;
    let g = |c: &[f64]| {
        // z = mid + u e + sum v_k b_k, so z - x = (u - a) e + V and z - y = (u + a) e + V.
        let (u, v) = (c[0], &c[1..]);
        let mut args = vec![0.0; 2 * d];
        let mut mirror = vec![0.0; 2 * d];
        let mut perp_sq = 0.0;
        for i in 0..d {
            let vi: f64 = perp.iter().zip(v).map(|(b, vk)| b[i] * vk).sum();
            args[i] = (u - a) * e[i] + vi;
            args[d + i] = (u + a) * e[i] + vi;
            mirror[i] = args[i];
            mirror[d + i] = -(u - a) * e[i] + vi;
        }
        for vk in v {
            perp_sq += vk * vk;
        }
        let r1 = ((u - a) * (u - a) + perp_sq).sqrt();
        let r2 = ((u + a) * (u + a) + perp_sq).sqrt();
        let n1 = if r1 > 0.0 { table.eval(r1) } else { f64::INFINITY };
        let n2 = if r2 > 0.0 { table.eval(r2) } else { f64::INFINITY };
        let mut total = 0.0;
        if which != Terms::Mirror {
            let m = n1.min(n2);
            if m > 0.0 {
                total += m * f.value(&args);
            }
        }
        if which != Terms::Minimum && n1 > n2 {
            let fm = f.value(&mirror);
            if fm != 0.0 {
                total += (n1 - n2) * fm;
            }
        }
        total
    };
    let est = integrate_rd(d, &[-a, 0.0, a], &g)?;
    Ok(Estimate::new(est.value, est.error + 2.0 * table.rel_error() * est.value.abs()))
}

/// Integral of `f` against the mirror coupling of the Lévy measures seen
/// from `x` and `y`:
/// `int f(z - x, z - y) min(n(z - x), n(z - y)) dz
///   + int f(z - x, R(z - x)) (n(z - x) - n(z - y))^+ dz`,
/// where `R` is the linear part of the reflection in the mirror plane.
pub fn coupled_levy_measure(x: &Vector, y: &Vector, f: &dyn TestFunction, spec: &SubordinatorSpec) -> Result<Estimate> {
    coupled_integral(x, y, f, spec, Terms::Both)
}

/// The two terms of [`coupled_levy_measure`] integrated separately:
/// `(minimum term, mirror term)`.
pub fn coupled_levy_terms(x: &Vector, y: &Vector, f: &dyn TestFunction, spec: &SubordinatorSpec) -> Result<(Estimate, Estimate)> {
    Ok((
        coupled_integral(x, y, f, spec, Terms::Minimum)?,
        coupled_integral(x, y, f, spec, Terms::Mirror)?,
    ))
}

/// Source of increments for the small-time estimator.
#[derive(Clone, Debug)]
pub enum IncrementSampler {
    /// `B_{S_t}` in `R^dim`.
    Single { spec: SubordinatorSpec, dim: usize },
    /// `(X_t - x, Y_t - y)` under the subordinated reflection coupling.
    Coupled { spec: SubordinatorSpec, x: Vector, y: Vector },
}

impl IncrementSampler {
    fn arity(&self) -> usize {
        match self {
            IncrementSampler::Single { dim, .. } => *dim,
            IncrementSampler::Coupled { x, .. } => 2 * x.dim(),
        }
    }

    fn draw(&self, t: f64, stream: &mut RngStream) -> Result<Vec<f64>> {
        match self {
            IncrementSampler::Single { spec, dim } => {
                let s = spec.increment(t, stream);
                Ok(normal_vector(*dim, stream).scale(s.sqrt()).into_inner())
            }
            IncrementSampler::Coupled { spec, x, y } => {
                let pair = subordinated_reflection_pair_at(x, y, t, spec, stream)?;
                let (a, b) = (pair.first() - x, pair.second() - y);
                Ok(a.as_slice().iter().chain(b.as_slice()).copied().collect())
            }
        }
    }
}

/// `(1/t) E f(increment_t)` at each `t`, extrapolated to `t -> 0`.
pub fn small_t_levy_estimate(
    sampler: &IncrementSampler,
    f: &dyn TestFunction,
    t_list: &[f64],
    replicas: u64,
    seed: u64,
) -> Result<Extrapolation> {
    check_levy_integrable(f)?;
    check_t_list(t_list)?;
    if f.arity() != sampler.arity() {
        return Err(Error::usage(format!(
            "{} takes {} arguments, increments have {}",
            f.name(),
            f.arity(),
            sampler.arity()
        )));
    }
    if let IncrementSampler::Coupled { x, y, .. } = sampler {
        check_same_dim(x, y)?;
    }
    if replicas < 2 {
        return Err(Error::usage("replicas must be at least 2"));
    }
    let mut quotients = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let s = seed_for_t(seed, t);
        let m = par_moments(replicas, |i| {
            let w = sampler.draw(t, &mut RngStream::new(s, i)).expect("arguments validated");
            f.value(&w) / t
        });
        quotients.push(Quotient { t, value: m.mean(), std_error: m.std_error() });
    }
    Ok(richardson(quotients))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generatorlab::functions::{Bilinear, QuarticBump, Zero};
    use crate::random::JumpLaw;
    use crate::special::gamma;

    fn stable_closed_form(alpha: f64, scale: f64, d: usize, r: f64) -> f64 {
        let df = d as f64;
        alpha * scale / gamma(1.0 - alpha)
            * (2.0 * PI).powf(-0.5 * df)
            * gamma(0.5 * df + alpha)
            * (2.0 / (r * r)).powf(0.5 * df + alpha)
    }

    #[test]
    fn cauchy_levy_density() {
        let half = SubordinatorSpec::stable(0.5, 1.0).unwrap();
        let n1 = subordinated_levy_density(&half, &Vector::from(vec![1.0])).unwrap();
        let exact = 1.0 / (2f64.sqrt() * PI);
        assert!((n1.value - exact).abs() < 1e-10, "{}", n1.value);
        assert!((exact - 0.2251).abs() < 1e-4);
        let minus = subordinated_levy_density(&half, &Vector::from(vec![-1.0])).unwrap();
        assert_eq!(n1.value, minus.value);
        assert!(subordinated_levy_density(&half, &Vector::from(vec![0.0])).is_err());
    }

    #[test]
    fn stable_density_closed_form_in_several_dimensions() {
        for &(alpha, scale) in &[(0.5, 1.0), (0.3, 2.0), (0.8, 0.5)] {
            let spec = SubordinatorSpec::stable(alpha, scale).unwrap();
            for d in 1..=3 {
                for &r in &[0.01, 0.5, 1.0, 7.0] {
                    let got = levy_density_radial(&spec, r, d).unwrap().value;
                    let exact = stable_closed_form(alpha, scale, d, r);
                    assert!((got / exact - 1.0).abs() < 1e-9, "alpha={alpha} d={d} r={r}");
                }
            }
        }
    }

    #[test]
    fn densities_decrease_and_tables_agree() {
        let specs = [
            SubordinatorSpec::stable(0.5, 1.0).unwrap(),
            SubordinatorSpec::gamma(0.5, 2.0, 1.0).unwrap(),
            SubordinatorSpec::compound_poisson(1.0, JumpLaw::Exponential { rate: 1.0 }).unwrap(),
            SubordinatorSpec::compound_poisson(1.0, JumpLaw::Fixed { size: 0.5 }).unwrap(),
        ];
        for spec in &specs {
            let table = LevyTable::new(spec, 2, 1.0).unwrap();
            assert!(table.rel_error() < 1e-6, "{spec:?}: {}", table.rel_error());
            let mut prev = f64::INFINITY;
            for k in 1..60 {
                let r = 0.1 * k as f64;
                let n = levy_density_radial(spec, r, 2).unwrap().value;
                assert!(n <= prev);
                assert!((table.eval(r) / n - 1.0).abs() < 1e-6);
                prev = n;
            }
        }
    }

    #[test]
    fn crossing_set_is_the_mirror_plane() {
        let half = SubordinatorSpec::stable(0.5, 1.0).unwrap();
        let (x, y) = (Vector::from(vec![0.5, 0.2]), Vector::from(vec![-0.3, 1.0]));
        let frame = make_frame(&x, &y).unwrap();
        for i in -10..=10 {
            for j in -10..=10 {
                let z = Vector::from(vec![0.37 * i as f64, 0.41 * j as f64]);
                if z == x || z == y {
                    continue;
                }
                let n1 = levy_density_radial(&half, z.distance(&x), 2).unwrap().value;
                let n2 = levy_density_radial(&half, z.distance(&y), 2).unwrap().value;
                let equal = ((n1 - n2) / n1.max(n2)).abs() < 1e-9;
                assert_eq!(equal, frame.on_plane(&z, 1e-9), "z={z:?}");
            }
        }
        // Points constructed on the plane.
        let e = frame.normal().unwrap();
        let mid = (&x + &y).scale(0.5);
        let along = Vector::from(vec![-e[1], e[0]]);
        for k in -5..=5 {
            let z = &mid + &along.scale(0.7 * k as f64);
            let n1 = levy_density_radial(&half, z.distance(&x), 2).unwrap().value;
            let n2 = levy_density_radial(&half, z.distance(&y), 2).unwrap().value;
            assert!(((n1 - n2) / n1).abs() < 1e-9);
        }
    }

    #[test]
    fn gate_rejects_low_order_functions() {
        let half = SubordinatorSpec::stable(0.5, 1.0).unwrap();
        let sampler = IncrementSampler::Single { spec: half, dim: 2 };
        assert!(small_t_levy_estimate(&sampler, &Bilinear { dim: 1 }, &[0.02, 0.01], 100, 1).is_err());
        let (x, y) = (Vector::from(vec![1.0]), Vector::from(vec![-1.0]));
        assert!(coupled_levy_measure(&x, &y, &Bilinear { dim: 1 }, &half).is_err());
    }

    #[test]
    fn zero_function_gives_zero() {
        let half = SubordinatorSpec::stable(0.5, 1.0).unwrap();
        let sampler = IncrementSampler::Single { spec: half, dim: 1 };
        let e = small_t_levy_estimate(&sampler, &Zero { arity: 1 }, &[0.02, 0.01], 1000, 1).unwrap();
        assert_eq!((e.value, e.error), (0.0, 0.0));
    }

    #[test]
    fn diagonal_start_reduces_to_the_single_measure() {
        // At x = y only the minimum term survives: int f(w, w) n(w) dw.
        let half = SubordinatorSpec::stable(0.5, 1.0).unwrap();
        let x = Vector::from(vec![0.3]);
        let f = QuarticBump::new(2, 1.0);
        let coupled = coupled_levy_measure(&x, &x, &f, &half).unwrap();
        let (_, mirror) = coupled_levy_terms(&x, &x, &f, &half).unwrap();
        assert_eq!(mirror.value, 0.0);
        // f(w, w) = 4 w^4 exp(-w^2), which is QuarticBump(1, 1/sqrt 2) scaled by 4.
        let diag = levy_integral(&half, &QuarticBump::new(1, 0.5f64.sqrt())).unwrap();
        assert!((coupled.value - 4.0 * diag.value).abs() < 1e-7 * diag.value, "{} vs {}", coupled.value, 4.0 * diag.value);
    }

    #[test]
    fn terms_add_up() {
        let half = SubordinatorSpec::stable(0.5, 1.0).unwrap();
        for (x, y) in [
            (Vector::from(vec![1.0]), Vector::from(vec![-1.0])),
            (Vector::from(vec![0.2, 0.1]), Vector::from(vec![-0.4, 0.5])),
        ] {
            let f = QuarticBump::new(2 * x.dim(), 1.0);
            let total = coupled_levy_measure(&x, &y, &f, &half).unwrap();
            let (m, r) = coupled_levy_terms(&x, &y, &f, &half).unwrap();
            let tol = total.error + m.error + r.error + 1e-9 * total.value.abs();
            assert!((total.value - m.value - r.value).abs() < tol, "{total:?} {m:?} {r:?}");
            assert!(m.value > 0.0 && r.value > 0.0);
        }
    }

    #[test]
    fn single_small_time_estimate_matches_quadrature() {
        let half = SubordinatorSpec::stable(0.5, 1.0).unwrap();
        let f = QuarticBump::new(1, 1.0);
        let exact = levy_integral(&half, &f).unwrap();
        let sampler = IncrementSampler::Single { spec: half, dim: 1 };
        let est = small_t_levy_estimate(&sampler, &f, &[0.04, 0.02, 0.01], 400_000, 2).unwrap();
        assert!((est.value - exact.value).abs() < 3.0 * est.error.hypot(exact.error), "{est:?} vs {exact:?}");
    }
}
