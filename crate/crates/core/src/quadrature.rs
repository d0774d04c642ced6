//! Adaptive Gauss–Kronrod (7, 15) quadrature with global bisection.
//!
//! Integrands return an [`Estimate`] so that nested integrals carry the
//! error of their inner integrations outwards: the inner error is integrated
//! with the same rule and added to the outer error estimate.

use crate::error::{Error, Result};

/// A value with an absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, error: 0.0 }
    }

    pub fn new(value: f64, error: f64) -> Self {
        Estimate { value, error }
    }

    pub fn scale(self, k: f64) -> Self {
        Estimate::new(self.value * k, self.error * k.abs())
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate::new(self.value + rhs.value, self.error + rhs.error)
    }
}

/// Tolerances for adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-12,
            rel: 1e-10,
            max_intervals: 2000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            ..Default::default()
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    // Discretization error; drives subdivision.
    error: f64,
    // Error carried in from the integrand's own estimates.
    inner: f64,
}

fn kronrod<F: FnMut(f64) -> Estimate>(f: &mut F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc.value * WGK[7];
    let mut gauss = fc.value * WG[3];
    let mut inner = fc.error * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        let s = f1.value + f2.value;
        kron += WGK[j] * s;
        inner += WGK[j] * (f1.error + f2.error);
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kron * h;
    let diff = ((kron - gauss) * h).abs();
    // |K15 - G7| overestimates the Kronrod error; keep it as the bound.
    let err = diff.max(50.0 * f64::EPSILON * value.abs());
    Segment {
        a,
        b,
        value,
        error: err,
        inner: (inner * h).abs(),
    }
}

/// Integrates an estimate-valued integrand over a finite interval.
pub fn integrate_est<F: FnMut(f64) -> Estimate>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate::exact(0.0));
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::usage("integrate_est needs a finite interval"));
    }
    let mut segs = vec![kronrod(&mut f, a, b)];
    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let err: f64 = segs.iter().map(|s| s.error).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::numerical(
                "quadrature",
                format!("non-finite integrand on [{a}, {b}]"),
            ));
        }
        if err <= tol.abs.max(tol.rel * total.abs()) {
            let inner: f64 = segs.iter().map(|s| s.inner).sum();
            return Ok(Estimate::new(total, err + inner));
        }
        if segs.len() >= tol.max_intervals {
            return Err(Error::numerical(
                "quadrature",
                format!(
                    "no convergence on [{a}, {b}] after {} intervals: value {total}, error {err}",
                    segs.len()
                ),
            ));
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let worst = segs.swap_remove(idx);
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::numerical(
                "quadrature",
                format!("interval collapsed near {mid} with error {}", worst.error),
            ));
        }
        segs.push(kronrod(&mut f, worst.a, mid));
        segs.push(kronrod(&mut f, mid, worst.b));
    }
}

/// Integrates a plain integrand over a finite interval.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    integrate_est(|x| Estimate::exact(f(x)), a, b, tol)
}

/// Integrates over `[a, inf)` via `x = a + (1 - u)/u`.
pub fn integrate_to_inf_est<F: FnMut(f64) -> Estimate>(mut f: F, a: f64, tol: Tolerance) -> Result<Estimate> {
    integrate_est(
        |u| {
            if u <= 0.0 {
                return Estimate::exact(0.0);
            }
            let x = a + (1.0 - u) / u;
            let jac = 1.0 / (u * u);
            let v = f(x);
            if v.value == 0.0 && v.error == 0.0 {
                return v;
            }
            v.scale(jac)
        },
        0.0,
        1.0,
        tol,
    )
}

pub fn integrate_to_inf<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: Tolerance) -> Result<Estimate> {
    integrate_to_inf_est(|x| Estimate::exact(f(x)), a, tol)
}

/// Integrates over the whole real line, split at `centre`.
pub fn integrate_real_line<F: FnMut(f64) -> f64>(mut f: F, centre: f64, tol: Tolerance) -> Result<Estimate> {
    let right = integrate_to_inf(&mut f, centre, tol)?;
    let left = integrate_to_inf(|x| f(2.0 * centre - x), centre, tol)?;
    Ok(left + right)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_over_real_line() {
        let r = integrate_real_line(|x| (-0.5 * x * x).exp(), 0.0, Tolerance::default()).unwrap();
        assert!((r.value - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
        assert!(r.error < 1e-8);
    }

    #[test]
    fn endpoint_singularity() {
        // int_0^1 x^{-1/2} = 2
        let r = integrate(|x| x.powf(-0.5), 0.0, 1.0, Tolerance::new(1e-10, 1e-10)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8, "{:?}", r);
    }

    #[test]
    fn kink_is_resolved() {
        let r = integrate(|x| (x - 0.3).abs(), 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-11);
    }

    #[test]
    fn inner_errors_propagate() {
        let r = integrate_est(|_| Estimate::new(1.0, 1e-3), 0.0, 2.0, Tolerance::new(1e-2, 0.0)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-14);
        assert!(r.error >= 2e-3 * 0.999);
    }

    #[test]
    fn non_convergence_reported() {
        let tol = Tolerance {
            abs: 1e-15,
            rel: 0.0,
            max_intervals: 5,
        };
        let r = integrate(|x| (1.0 / x).sin(), 1e-6, 1.0, tol);
        assert!(matches!(r, Err(Error::Numerical { .. })));
    }
}
