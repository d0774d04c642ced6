use std::f64::consts::PI;

use rand_distr::{Distribution, Gamma, Poisson};
use statrs::function::gamma::gamma as gamma_fn;

use super::RngStream;
use crate::error::{Error, Result};

/// Distribution of the jump sizes of a compound Poisson subordinator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JumpLaw {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    /// Every jump has the same size.
    Fixed { size: f64 },
}

impl JumpLaw {
    fn diagnostics(&self, out: &mut Vec<String>) {
        match *self {
            JumpLaw::Exponential { rate } => {
                if !(rate > 0.0 && rate.is_finite()) {
                    out.push("exponential jump rate must be positive".into());
                }
            }
            JumpLaw::Gamma { shape, rate } => {
                if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
                    out.push("gamma jump shape and rate must be positive".into());
                }
            }
            JumpLaw::Fixed { size } => {
                if !(size > 0.0 && size.is_finite()) {
                    out.push("fixed jump size must be positive".into());
                }
            }
        }
    }

    /// `E[exp(-lambda J)]`.
    pub fn laplace(&self, lambda: f64) -> f64 {
        match *self {
            JumpLaw::Exponential { rate } => rate / (rate + lambda),
            JumpLaw::Gamma { shape, rate } => (rate / (rate + lambda)).powf(shape),
            JumpLaw::Fixed { size } => (-lambda * size).exp(),
        }
    }

    /// Jump size density; `None` for the fixed law.
    pub fn density(&self, s: f64) -> Option<f64> {
        if s <= 0.0 {
            return Some(0.0);
        }
        match *self {
            JumpLaw::Exponential { rate } => Some(rate * (-rate * s).exp()),
            JumpLaw::Gamma { shape, rate } => Some(
                (shape * rate.ln() + (shape - 1.0) * s.ln() - rate * s
                    - statrs::function::gamma::ln_gamma(shape))
                .exp(),
            ),
            JumpLaw::Fixed { .. } => None,
        }
    }
}

/// Jump part of a subordinator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JumpFamily {
    /// Pure drift, no jumps.
    None,
    /// One-sided stable law with Laplace exponent `scale * lambda^alpha`.
    Stable { alpha: f64 },
    /// Gamma subordinator: `S_t ~ Gamma(shape * scale * t, rate)`.
    Gamma { shape: f64, rate: f64 },
    /// Poisson number of jumps with intensity `scale * rate`.
    CompoundPoisson { rate: f64, jump: JumpLaw },
}

/// Shape of the Lévy measure of a subordinator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LevyMeasureKind {
    Zero,
    /// Absolutely continuous; see [`SubordinatorSpec::levy_density`].
    Density,
    /// Single atom of mass `mass` at `size`.
    Atom { size: f64, mass: f64 },
}

/// A subordinator given by drift and jump part.
///
/// Laplace exponent: `phi(lambda) = drift * lambda + scale * phi_jump(lambda)`
/// where `phi_jump` is `lambda^alpha` (stable), `shape * ln(1 + lambda/rate)`
/// (gamma) or `rate * (1 - E exp(-lambda J))` (compound Poisson).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubordinatorSpec {
    drift: f64,
    family: JumpFamily,
    scale: f64,
}

impl SubordinatorSpec {
    pub fn new(drift: f64, family: JumpFamily, scale: f64) -> Result<Self> {
        let spec = SubordinatorSpec {
            drift,
            family,
            scale,
        };
        let diags = spec.diagnostics();
        if diags.is_empty() {
            Ok(spec)
        } else {
            Err(Error::config(diags.join("; ")))
        }
    }

    /// `S_t = b t`.
    pub fn drift_only(drift: f64) -> Result<Self> {
        Self::new(drift, JumpFamily::None, 1.0)
    }

    pub fn stable(alpha: f64, scale: f64) -> Result<Self> {
        Self::new(0.0, JumpFamily::Stable { alpha }, scale)
    }

    pub fn gamma(shape: f64, rate: f64, scale: f64) -> Result<Self> {
        Self::new(0.0, JumpFamily::Gamma { shape, rate }, scale)
    }

    pub fn compound_poisson(rate: f64, jump: JumpLaw) -> Result<Self> {
        Self::new(0.0, JumpFamily::CompoundPoisson { rate, jump }, 1.0)
    }

    /// Returns a copy with the given drift, revalidated.
    pub fn with_drift(self, drift: f64) -> Result<Self> {
        Self::new(drift, self.family, self.scale)
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn family(&self) -> JumpFamily {
        self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Field-level problems with the parameters; empty iff valid.
    pub fn diagnostics(&self) -> Vec<String> {
        Self::diagnose(self.drift, self.family, self.scale)
    }

    /// Diagnostics for raw parameters, without building a spec.
    pub fn diagnose(drift: f64, family: JumpFamily, scale: f64) -> Vec<String> {
        let spec = SubordinatorSpec { drift, family, scale };
        let mut out = Vec::new();
        if !(spec.drift >= 0.0 && spec.drift.is_finite()) {
            out.push("subordinator drift must be finite and nonnegative".into());
        }
        if !(spec.scale > 0.0 && spec.scale.is_finite()) {
            out.push("subordinator scale must be positive".into());
        }
        match spec.family {
            JumpFamily::None => {
                if spec.drift == 0.0 {
                    out.push("subordinator without jumps needs a positive drift".into());
                }
            }
            JumpFamily::Stable { alpha } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    out.push("subordinator stable index must lie in (0,1)".into());
                }
            }
            JumpFamily::Gamma { shape, rate } => {
                if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
                    out.push("gamma subordinator shape and rate must be positive".into());
                }
            }
            JumpFamily::CompoundPoisson { rate, jump } => {
                if !(rate > 0.0 && rate.is_finite()) {
                    out.push("compound Poisson rate must be positive".into());
                }
                jump.diagnostics(&mut out);
            }
        }
        out
    }

    pub fn laplace_exponent(&self, lambda: f64) -> f64 {
        let jump = match self.family {
            JumpFamily::None => 0.0,
            JumpFamily::Stable { alpha } => lambda.powf(alpha),
            JumpFamily::Gamma { shape, rate } => shape * (lambda / rate).ln_1p(),
            JumpFamily::CompoundPoisson { rate, jump } => rate * (1.0 - jump.laplace(lambda)),
        };
        self.drift * lambda + self.scale * jump
    }

    /// `P(S_t = 0)`.
    pub fn atom_at_zero(&self, t: f64) -> f64 {
        if self.drift > 0.0 {
            return 0.0;
        }
        match self.family {
            JumpFamily::CompoundPoisson { rate, .. } => (-self.scale * rate * t).exp(),
            _ => 0.0,
        }
    }

    pub fn levy_measure_kind(&self) -> LevyMeasureKind {
        match self.family {
            JumpFamily::None => LevyMeasureKind::Zero,
            JumpFamily::CompoundPoisson {
                rate,
                jump: JumpLaw::Fixed { size },
            } => LevyMeasureKind::Atom {
                size,
                mass: self.scale * rate,
            },
            _ => LevyMeasureKind::Density,
        }
    }

    /// Density of the Lévy measure at `s > 0` (zero for atomic or empty
    /// measures; check [`Self::levy_measure_kind`]).
    pub fn levy_density(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self.family {
            JumpFamily::None => 0.0,
            JumpFamily::Stable { alpha } => {
                self.scale * alpha / gamma_fn(1.0 - alpha) * s.powf(-1.0 - alpha)
            }
            JumpFamily::Gamma { shape, rate } => self.scale * shape * (-rate * s).exp() / s,
            JumpFamily::CompoundPoisson { rate, jump } => {
                self.scale * rate * jump.density(s).unwrap_or(0.0)
            }
        }
    }

    /// One increment `S_{t+dt} - S_t`.
    pub fn increment(&self, dt: f64, stream: &mut RngStream) -> f64 {
        debug_assert!(dt > 0.0);
        let jump = match self.family {
            JumpFamily::None => 0.0,
            JumpFamily::Stable { alpha } => {
                let c = self.scale * dt;
                if alpha == 0.5 {
                    let z = stream.normal();
                    c * c / (2.0 * z * z)
                } else {
                    c.powf(1.0 / alpha) * stable_unit_cms(alpha, stream)
                }
            }
            JumpFamily::Gamma { shape, rate } => gamma_draw(shape * self.scale * dt, stream) / rate,
            JumpFamily::CompoundPoisson { rate, jump } => {
                let mean = self.scale * rate * dt;
                let count = Poisson::new(mean)
                    .map(|p| p.sample(stream))
                    .unwrap_or(0.0) as u64;
                if count == 0 {
                    0.0
                } else {
                    match jump {
                        JumpLaw::Exponential { rate } => {
                            gamma_draw(count as f64, stream) / rate
                        }
                        JumpLaw::Gamma { shape, rate } => {
                            gamma_draw(shape * count as f64, stream) / rate
                        }
                        JumpLaw::Fixed { size } => size * count as f64,
                    }
                }
            }
        };
        self.drift * dt + jump
    }

    /// Validates `dt` and draws an increment.
    pub fn subordinator_increment(&self, dt: f64, stream: &mut RngStream) -> Result<f64> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::usage("subordinator increment needs dt > 0"));
        }
        Ok(self.increment(dt, stream))
    }

    /// Human-readable normalization record for run manifests.
    pub fn describe(&self) -> String {
        let fam = match self.family {
            JumpFamily::None => "none".to_string(),
            JumpFamily::Stable { alpha } => {
                format!("stable(alpha={alpha}; phi=scale*lambda^alpha)")
            }
            JumpFamily::Gamma { shape, rate } => {
                format!("gamma(shape={shape}, rate={rate}; phi=scale*shape*ln(1+lambda/rate))")
            }
            JumpFamily::CompoundPoisson { rate, jump } => {
                format!("compound_poisson(rate={rate}, jump={jump:?}; phi=scale*rate*(1-E e^(-lambda J)))")
            }
        };
        format!("drift={} scale={} family={}", self.drift, self.scale, fam)
    }
}

/// Gamma(shape, 1) draw; the `shape < 1` branch works in log space so tiny
/// shapes do not collapse to exact zeros early.
fn gamma_draw(shape: f64, stream: &mut RngStream) -> f64 {
    if shape >= 1.0 {
        return Gamma::new(shape, 1.0)
            .map(|g| g.sample(stream))
            .unwrap_or(0.0);
    }
    let g: f64 = Gamma::new(shape + 1.0, 1.0)
        .map(|g| g.sample(stream))
        .unwrap_or(0.0);
    (g.ln() + stream.open01().ln() / shape).exp()
}

/// Positive stable draw with `E exp(-lambda S) = exp(-lambda^alpha)`
/// (Chambers–Mallows–Stuck / Kanter form).
pub fn stable_unit_cms(alpha: f64, stream: &mut RngStream) -> f64 {
    let u = PI * stream.open01();
    let w = stream.exp1();
    let head = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let tail = (((1.0 - alpha) * u).sin() / w).powf((1.0 - alpha) / alpha);
    head * tail
}
