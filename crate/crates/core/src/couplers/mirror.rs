use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::{normal_vector, PairSample};
use crate::error::{Error, Result};
use crate::geometry::{check_same_dim, make_frame, reflect_unchecked, Vector};
use crate::quadrature::{integrate, Tolerance};
use crate::random::RngStream;
use crate::special::ln_gamma;

type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum ProfileKind {
    Gaussian { variance: f64 },
    Cauchy { scale: f64 },
    Tabulated {
        density: DensityFn,
        radii: Arc<Vec<f64>>,
        cdf: Arc<Vec<f64>>,
    },
}

/// A rotationally invariant density `f(z) = p(|z|)` on `R^d`, possibly with
/// total mass below one.
#[derive(Clone)]
pub struct RadialProfile {
    dim: usize,
    kind: ProfileKind,
    total_mass: f64,
    monotone: bool,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            ProfileKind::Gaussian { variance } => format!("gaussian(var={variance})"),
            ProfileKind::Cauchy { scale } => format!("cauchy(scale={scale})"),
            ProfileKind::Tabulated { radii, .. } => format!("tabulated({} nodes)", radii.len()),
        };
        f.debug_struct("RadialProfile")
            .field("dim", &self.dim)
            .field("kind", &kind)
            .field("total_mass", &self.total_mass)
            .field("monotone", &self.monotone)
            .finish()
    }
}

/// Surface area of the unit sphere in `R^d`.
pub(crate) fn sphere_area(dim: usize) -> f64 {
    let h = dim as f64 / 2.0;
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

impl RadialProfile {
    /// Centred Gaussian `N(0, variance I_d)`.
    pub fn gaussian(dim: usize, variance: f64) -> Result<Self> {
        if dim == 0 || !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::usage("gaussian profile needs d >= 1 and variance > 0"));
        }
        Ok(RadialProfile {
            dim,
            kind: ProfileKind::Gaussian { variance },
            total_mass: 1.0,
            monotone: true,
        })
    }

    /// Isotropic Cauchy law with scale `scale` (multivariate t, one degree of
    /// freedom). Equals Brownian motion at a half-stable time.
    pub fn cauchy(dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::usage("cauchy profile needs d >= 1 and scale > 0"));
        }
        Ok(RadialProfile {
            dim,
            kind: ProfileKind::Cauchy { scale },
            total_mass: 1.0,
            monotone: true,
        })
    }

    /// A user-supplied profile `p`, supported on `[0, r_max]`. Sampling uses
    /// an inverse-CDF table with `nodes` cells; the total mass is computed by
    /// quadrature. If `monotone` is set the profile is checked to be
    /// nonincreasing on the table nodes.
    pub fn from_fn<F>(dim: usize, density: F, r_max: f64, nodes: usize, monotone: bool) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if dim == 0 || !(r_max > 0.0 && r_max.is_finite()) || nodes < 2 {
            return Err(Error::usage("tabulated profile needs d >= 1, r_max > 0, nodes >= 2"));
        }
        let area = sphere_area(dim);
        let radial = |r: f64| area * r.powi(dim as i32 - 1) * density(r);
        let radii: Vec<f64> = (0..=nodes).map(|k| r_max * k as f64 / nodes as f64).collect();
        let mut cdf = Vec::with_capacity(radii.len());
        cdf.push(0.0);
        let mut acc = 0.0;
        for w in radii.windows(2) {
            acc += integrate(radial, w[0], w[1], Tolerance::new(1e-14, 1e-12))?.value;
            cdf.push(acc);
        }
        if monotone && radii.windows(2).any(|w| density(w[1]) > density(w[0])) {
            return Err(Error::usage("profile flagged monotone but increases somewhere"));
        }
        if radii.iter().any(|&r| !(density(r) >= 0.0)) {
            return Err(Error::usage("profile must be nonnegative"));
        }
        Ok(RadialProfile {
            dim,
            kind: ProfileKind::Tabulated {
                density: Arc::new(density),
                radii: Arc::new(radii),
                cdf: Arc::new(cdf),
            },
            total_mass: acc,
            monotone,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    /// `p(r)`.
    pub fn density_at(&self, r: f64) -> f64 {
        let d = self.dim as f64;
        match &self.kind {
            ProfileKind::Gaussian { variance } => {
                (-0.5 * r * r / variance).exp() / (2.0 * PI * variance).powf(0.5 * d)
            }
            ProfileKind::Cauchy { scale } => {
                let h = 0.5 * (d + 1.0);
                let c = (ln_gamma(h) - h * PI.ln()).exp();
                c * scale / (r * r + scale * scale).powf(h)
            }
            ProfileKind::Tabulated { density, radii, .. } => {
                if r > *radii.last().expect("nodes") {
                    0.0
                } else {
                    density(r)
                }
            }
        }
    }

    /// Draw from `p(|z|) / total_mass`.
    pub fn sample_offset(&self, stream: &mut RngStream) -> Vector {
        match &self.kind {
            ProfileKind::Gaussian { variance } => normal_vector(self.dim, stream).scale(variance.sqrt()),
            ProfileKind::Cauchy { scale } => {
                let z = normal_vector(self.dim, stream);
                let w = stream.normal().abs();
                z.scale(scale / w)
            }
            ProfileKind::Tabulated { radii, cdf, .. } => {
                let target = stream.open01() * cdf.last().expect("nodes");
                let k = cdf.partition_point(|&c| c < target).clamp(1, cdf.len() - 1);
                let (c0, c1) = (cdf[k - 1], cdf[k]);
                let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
                let r = radii[k - 1] + frac * (radii[k] - radii[k - 1]);
                let dir = normal_vector(self.dim, stream);
                let n = dir.norm();
                dir.scale(r / n)
            }
        }
    }
}

/// One draw from the mirror coupling of `p(|. - x|)` and `p(|. - y|)`.
///
/// The first leg `W` is drawn from the profile around `x`; it is kept as the
/// second leg with probability `min(p(|W-x|), p(|W-y|)) / p(|W-x|)` and
/// otherwise reflected across the mirror plane.
pub fn mirror_pair(profile: &RadialProfile, x: &Vector, y: &Vector, stream: &mut RngStream) -> Result<PairSample> {
    check_same_dim(x, y)?;
    if x.dim() != profile.dim() {
        return Err(Error::usage("profile dimension differs from the start points"));
    }
    if (profile.total_mass() - 1.0).abs() > 1e-6 {
        return Err(Error::usage(format!(
            "mirror pair needs a probability profile, total mass is {}",
            profile.total_mass()
        )));
    }
    let frame = make_frame(x, y)?;
    let w = x + &profile.sample_offset(stream);
    if frame.is_degenerate() {
        return Ok(PairSample::merged(w, None));
    }
    let px = profile.density_at(w.distance(x));
    let py = profile.density_at(w.distance(y));
    let keep = px > 0.0 && stream.open01() * px < px.min(py);
    if keep {
        Ok(PairSample::merged(w, None))
    } else {
        let second = reflect_unchecked(&frame, &w);
        Ok(PairSample::apart(w, second))
    }
}
