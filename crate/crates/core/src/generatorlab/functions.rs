use rand::Rng;

use crate::error::{Error, Result};
use crate::random::RngStream;

/// Smooth test function with analytic first and second derivatives.
///
/// Coupled generators see `f` on `R^{2d}` with arguments `(x, y)`
/// concatenated; single-process Lévy checks see it on `R^d`.
pub trait TestFunction: Sync {
    fn arity(&self) -> usize;
    fn value(&self, w: &[f64]) -> f64;
    fn gradient(&self, w: &[f64]) -> Vec<f64>;
    /// Row-major `arity x arity` matrix of second derivatives.
    fn hessian(&self, w: &[f64]) -> Vec<Vec<f64>>;
    /// Exponent `p` with `|f(w)| <= c |w|^p` near the origin, `0` if `f`
    /// does not vanish there and infinity if it vanishes on a neighbourhood.
    fn near_origin_order(&self) -> f64;
    fn name(&self) -> String;
}

fn sq_norm(w: &[f64]) -> f64 {
    w.iter().map(|v| v * v).sum()
}

/// `<x, y>` on `R^{2d}`.
#[derive(Clone, Debug)]
pub struct Bilinear {
    pub dim: usize,
}

impl TestFunction for Bilinear {
    fn arity(&self) -> usize {
        2 * self.dim
    }

    fn value(&self, w: &[f64]) -> f64 {
        let d = self.dim;
        (0..d).map(|i| w[i] * w[d + i]).sum()
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..2 * d).map(|i| if i < d { w[d + i] } else { w[i - d] }).collect()
    }

    fn hessian(&self, _w: &[f64]) -> Vec<Vec<f64>> {
        let n = 2 * self.dim;
        let mut h = vec![vec![0.0; n]; n];
        for i in 0..self.dim {
            h[i][self.dim + i] = 1.0;
            h[self.dim + i][i] = 1.0;
        }
        h
    }

    fn near_origin_order(&self) -> f64 {
        2.0
    }

    fn name(&self) -> String {
        format!("bilinear(d={})", self.dim)
    }
}

/// `exp(-|w - c|^2 / (2 L^2))`.
#[derive(Clone, Debug)]
pub struct GaussianBump {
    pub centre: Vec<f64>,
    pub width: f64,
}

impl TestFunction for GaussianBump {
    fn arity(&self) -> usize {
        self.centre.len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        let r2: f64 = w.iter().zip(&self.centre).map(|(a, c)| (a - c) * (a - c)).sum();
        (-0.5 * r2 / (self.width * self.width)).exp()
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let f = self.value(w);
        let l2 = self.width * self.width;
        w.iter().zip(&self.centre).map(|(a, c)| -f * (a - c) / l2).collect()
    }

    fn hessian(&self, w: &[f64]) -> Vec<Vec<f64>> {
        let f = self.value(w);
        let l2 = self.width * self.width;
        let u: Vec<f64> = w.iter().zip(&self.centre).map(|(a, c)| (a - c) / l2).collect();
        (0..u.len())
            .map(|i| {
                (0..u.len())
                    .map(|j| f * (u[i] * u[j] - if i == j { 1.0 / l2 } else { 0.0 }))
                    .collect()
            })
            .collect()
    }

    fn near_origin_order(&self) -> f64 {
        0.0
    }

    fn name(&self) -> String {
        format!("gaussian-bump(width={})", self.width)
    }
}

/// `sin(<a, w> + phase)`.
#[derive(Clone, Debug)]
pub struct Trig {
    pub freq: Vec<f64>,
    pub phase: f64,
}

impl TestFunction for Trig {
    fn arity(&self) -> usize {
        self.freq.len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.arg(w).sin()
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let c = self.arg(w).cos();
        self.freq.iter().map(|a| a * c).collect()
    }

    fn hessian(&self, w: &[f64]) -> Vec<Vec<f64>> {
        let s = self.arg(w).sin();
        self.freq
            .iter()
            .map(|ai| self.freq.iter().map(|aj| -ai * aj * s).collect())
            .collect()
    }

    fn near_origin_order(&self) -> f64 {
        0.0
    }

    fn name(&self) -> String {
        "trig".into()
    }
}

impl Trig {
    fn arg(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.freq).map(|(a, b)| a * b).sum::<f64>() + self.phase
    }
}

/// `<x, y> exp(-|w|^2 / (2 L^2))`: the bilinear function under a bump.
#[derive(Clone, Debug)]
pub struct CrossBump {
    pub dim: usize,
    pub width: f64,
}

impl TestFunction for CrossBump {
    fn arity(&self) -> usize {
        2 * self.dim
    }

    fn value(&self, w: &[f64]) -> f64 {
        Bilinear { dim: self.dim }.value(w) * self.envelope(w)
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let b = Bilinear { dim: self.dim };
        let (p, e) = (b.value(w), self.envelope(w));
        let l2 = self.width * self.width;
        b.gradient(w)
            .iter()
            .zip(w)
            .map(|(gp, wi)| e * (gp - p * wi / l2))
            .collect()
    }

    fn hessian(&self, w: &[f64]) -> Vec<Vec<f64>> {
        // f = p e with e = exp(-|w|^2/(2L^2)), de = -e w / L^2.
        let b = Bilinear { dim: self.dim };
        let (p, e) = (b.value(w), self.envelope(w));
        let gp = b.gradient(w);
        let hp = b.hessian(w);
        let l2 = self.width * self.width;
        let n = w.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let he = e * (w[i] * w[j] / (l2 * l2) - if i == j { 1.0 / l2 } else { 0.0 });
                        e * hp[i][j] - e * (gp[i] * w[j] + gp[j] * w[i]) / l2 + p * he
                    })
                    .collect()
            })
            .collect()
    }

    fn near_origin_order(&self) -> f64 {
        2.0
    }

    fn name(&self) -> String {
        format!("cross-bump(d={}, width={})", self.dim, self.width)
    }
}

impl CrossBump {
    fn envelope(&self, w: &[f64]) -> f64 {
        (-0.5 * sq_norm(w) / (self.width * self.width)).exp()
    }
}

/// `|w - c|^4 exp(-|w - c|^2 / (2 L^2))`, shifted by `c` from the origin;
/// vanishes to fourth order at `c`.
///
/// With `c = 0` it satisfies the growth bound `|f(w)| <= C |w|^{2+eps}`
/// needed for integration against a Lévy measure.
#[derive(Clone, Debug)]
pub struct QuarticBump {
    pub arity: usize,
    pub width: f64,
    pub scale: Vec<f64>,
}

impl QuarticBump {
    /// Isotropic bump in `R^arity`.
    pub fn new(arity: usize, width: f64) -> Self {
        QuarticBump {
            arity,
            width,
            scale: vec![1.0; arity],
        }
    }

    /// Anisotropic version: coordinates are weighted by `scale` before the
    /// radius is taken.
    pub fn weighted(width: f64, scale: Vec<f64>) -> Self {
        QuarticBump {
            arity: scale.len(),
            width,
            scale,
        }
    }

    fn r2(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.scale).map(|(a, s)| s * a * a).sum()
    }
}

impl TestFunction for QuarticBump {
    fn arity(&self) -> usize {
        self.arity
    }

    fn value(&self, w: &[f64]) -> f64 {
        let q = self.r2(w);
        q * q * (-0.5 * q / (self.width * self.width)).exp()
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        // f = h(q), h(q) = q^2 e^{-q/(2L^2)}, dq/dw_i = 2 s_i w_i.
        let q = self.r2(w);
        let l2 = self.width * self.width;
        let e = (-0.5 * q / l2).exp();
        let h1 = e * (2.0 * q - 0.5 * q * q / l2);
        w.iter().zip(&self.scale).map(|(a, s)| h1 * 2.0 * s * a).collect()
    }

    fn hessian(&self, w: &[f64]) -> Vec<Vec<f64>> {
        let q = self.r2(w);
        let l2 = self.width * self.width;
        let e = (-0.5 * q / l2).exp();
        let h1 = e * (2.0 * q - 0.5 * q * q / l2);
        let h2 = e * (2.0 - 2.0 * q / l2 + 0.25 * q * q / (l2 * l2));
        let n = self.arity;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let qi = 2.0 * self.scale[i] * w[i];
                        let qj = 2.0 * self.scale[j] * w[j];
                        h2 * qi * qj + if i == j { h1 * 2.0 * self.scale[i] } else { 0.0 }
                    })
                    .collect()
            })
            .collect()
    }

    fn near_origin_order(&self) -> f64 {
        4.0
    }

    fn name(&self) -> String {
        format!("quartic-bump(n={}, width={})", self.arity, self.width)
    }
}

/// The zero function.
#[derive(Clone, Debug)]
pub struct Zero {
    pub arity: usize,
}

impl TestFunction for Zero {
    fn arity(&self) -> usize {
        self.arity
    }

    fn value(&self, _w: &[f64]) -> f64 {
        0.0
    }

    fn gradient(&self, _w: &[f64]) -> Vec<f64> {
        vec![0.0; self.arity]
    }

    fn hessian(&self, _w: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![0.0; self.arity]; self.arity]
    }

    fn near_origin_order(&self) -> f64 {
        f64::INFINITY
    }

    fn name(&self) -> String {
        "zero".into()
    }
}

pub(crate) const CHECK_POINTS: usize = 100;
pub(crate) const CHECK_REL_TOL: f64 = 1e-6;

/// Compares the analytic derivatives of `f` with central differences at
/// 100 random points of `[-2, 2]^n`.
pub fn self_check(f: &dyn TestFunction, seed: u64) -> Result<()> {
    let n = f.arity();
    let mut stream = RngStream::new(seed, 0);
    for _ in 0..CHECK_POINTS {
        let w: Vec<f64> = (0..n).map(|_| stream.random_range(-2.0..2.0)).collect();
        let grad = f.gradient(&w);
        let hess = f.hessian(&w);
        if grad.len() != n || hess.len() != n || hess.iter().any(|row| row.len() != n) {
            return Err(Error::usage(format!("{}: derivative shapes do not match arity {n}", f.name())));
        }
        for i in 0..n {
            let h = 1e-5 * w[i].abs().max(1.0);
            let mut plus = w.clone();
            let mut minus = w.clone();
            plus[i] += h;
            minus[i] -= h;
            let fd = (f.value(&plus) - f.value(&minus)) / (2.0 * h);
            check_close(f, "gradient", i, i, fd, grad[i])?;
            let (gp, gm) = (f.gradient(&plus), f.gradient(&minus));
            for j in 0..n {
                let fd2 = (gp[j] - gm[j]) / (2.0 * h);
                check_close(f, "hessian", i, j, fd2, hess[i][j])?;
            }
        }
    }
    Ok(())
}

fn check_close(f: &dyn TestFunction, what: &str, i: usize, j: usize, fd: f64, exact: f64) -> Result<()> {
    if (fd - exact).abs() > CHECK_REL_TOL * exact.abs().max(1.0) {
        return Err(Error::usage(format!(
            "{}: analytic {what} entry ({i},{j}) = {exact} disagrees with finite difference {fd}",
            f.name()
        )));
    }
    Ok(())
}
