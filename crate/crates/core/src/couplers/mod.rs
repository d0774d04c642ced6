//! Samplers for coupled pairs of Brownian and subordinated Brownian motions.

mod elementary;
pub(crate) mod mirror;
mod reflection;
mod subordinated;

use std::str::FromStr;

pub use elementary::{elementary_pair_at, ElementaryKind, SWITCH_TIME};
pub use mirror::{mirror_pair, RadialProfile};
pub use reflection::{reflection_pair_at, reflection_path, ReflectionCoupling};
pub use subordinated::{subordinated_reflection_pair_at, subordinated_reflection_path};

use crate::error::{Error, Result};
use crate::geometry::Vector;
use crate::random::{RngStream, SubordinatorSpec};

/// One coupled draw.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSample {
    first: Vector,
    second: Vector,
    merged: bool,
    coupling_time: Option<f64>,
}

impl PairSample {
    /// A merged pair sitting at `point`.
    pub fn merged(point: Vector, coupling_time: Option<f64>) -> Self {
        PairSample {
            second: point.clone(),
            first: point,
            merged: true,
            coupling_time,
        }
    }

    /// A pair whose legs have not met. Coinciding coordinates are still
    /// flagged as merged so that `merged` is exactly `first == second`.
    pub fn apart(first: Vector, second: Vector) -> Self {
        let merged = first == second;
        PairSample {
            first,
            second,
            merged,
            coupling_time: None,
        }
    }

    pub fn first(&self) -> &Vector {
        &self.first
    }

    pub fn second(&self) -> &Vector {
        &self.second
    }

    pub fn is_merged(&self) -> bool {
        self.merged
    }

    pub fn coupling_time(&self) -> Option<f64> {
        self.coupling_time
    }

    pub fn into_parts(self) -> (Vector, Vector) {
        (self.first, self.second)
    }
}

/// A coupled path observed on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSkeleton {
    pub times: Vec<f64>,
    pub states: Vec<PairSample>,
    /// Time at which the legs met, if they did within the grid.
    pub absorbed_at: Option<f64>,
}

impl PathSkeleton {
    /// Whether the pair has met by time `t`.
    pub fn absorbed_by(&self, t: f64) -> bool {
        self.absorbed_at.is_some_and(|a| a <= t)
    }
}

/// Couplings that can be sampled at a fixed time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupler {
    Reflection,
    Synchronized,
    Antithetic,
    Switch,
    SubordinatedReflection(SubordinatorSpec),
}

impl Coupler {
    pub fn pair_at(&self, x: &Vector, y: &Vector, t: f64, stream: &mut RngStream) -> Result<PairSample> {
        match self {
            Coupler::Reflection => reflection_pair_at(x, y, t, stream),
            Coupler::Synchronized => elementary_pair_at(ElementaryKind::Synchronized, x, y, t, stream),
            Coupler::Antithetic => elementary_pair_at(ElementaryKind::Antithetic, x, y, t, stream),
            Coupler::Switch => elementary_pair_at(ElementaryKind::Switch, x, y, t, stream),
            Coupler::SubordinatedReflection(spec) => subordinated_reflection_pair_at(x, y, t, spec, stream),
        }
    }

    /// Whether this coupler is a maximal coupling of its marginals.
    pub fn is_maximal(&self) -> bool {
        matches!(self, Coupler::Reflection | Coupler::SubordinatedReflection(_))
    }

    /// Whether both legs are Brownian motions.
    pub fn is_brownian(&self) -> bool {
        !matches!(self, Coupler::SubordinatedReflection(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Coupler::Reflection => "reflection",
            Coupler::Synchronized => "synchronized",
            Coupler::Antithetic => "antithetic",
            Coupler::Switch => "switch",
            Coupler::SubordinatedReflection(_) => "subordinated-reflection",
        }
    }
}

/// Coupler names without parameters; the subordinated coupler needs a spec
/// attached afterwards.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplerKind {
    Reflection,
    Synchronized,
    Antithetic,
    Switch,
    SubordinatedReflection,
}

impl CouplerKind {
    pub fn with_spec(self, spec: Option<SubordinatorSpec>) -> Result<Coupler> {
        Ok(match self {
            CouplerKind::Reflection => Coupler::Reflection,
            CouplerKind::Synchronized => Coupler::Synchronized,
            CouplerKind::Antithetic => Coupler::Antithetic,
            CouplerKind::Switch => Coupler::Switch,
            CouplerKind::SubordinatedReflection => Coupler::SubordinatedReflection(
                spec.ok_or_else(|| Error::usage("subordinated coupler needs a subordinator"))?,
            ),
        })
    }
}

impl FromStr for CouplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reflection" => Ok(CouplerKind::Reflection),
            "synchronized" => Ok(CouplerKind::Synchronized),
            "antithetic" => Ok(CouplerKind::Antithetic),
            "switch" => Ok(CouplerKind::Switch),
            "subordinated-reflection" => Ok(CouplerKind::SubordinatedReflection),
            other => Err(Error::usage(format!("unknown coupler kind '{other}'"))),
        }
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::usage(format!("time must be positive and finite, got {t}")));
    }
    Ok(())
}

/// `x + sqrt(var) * Z` with `Z` standard normal in `R^d`.
#[inline]
pub(crate) fn gaussian_step(x: &Vector, var: f64, stream: &mut RngStream) -> Vector {
    let sd = var.sqrt();
    let coords: Vec<f64> = x.as_slice().iter().map(|c| c + sd * stream.normal()).collect();
    Vector::from(coords)
}

/// Standard normal vector in `R^d`.
#[inline]
pub(crate) fn normal_vector(dim: usize, stream: &mut RngStream) -> Vector {
    Vector::from((0..dim).map(|_| stream.normal()).collect::<Vec<_>>())
}
