use std::ops::Range;

use super::tv::{Law, TvCurve};
use crate::couplers::{Coupler, PairSample};
use crate::error::{Error, Result};
use crate::geometry::{check_same_dim, Vector};
use crate::montecarlo::{par_map, par_moments};
use crate::random::RngStream;

/// Seed and stream ids used to produce a sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedManifest {
    pub seed: u64,
    pub streams: Range<u64>,
}

/// Uniformly weighted sample of coupled pairs at a fixed time.
#[derive(Clone, Debug)]
pub struct EmpiricalCoupling {
    pairs: Vec<PairSample>,
    seed_manifest: SeedManifest,
}

impl EmpiricalCoupling {
    /// Draws `replicas` pairs; replica `i` uses stream `i` of `seed`.
    pub fn sample(coupler: &Coupler, x: &Vector, y: &Vector, t: f64, replicas: u64, seed: u64) -> Result<Self> {
        check_same_dim(x, y)?;
        let pairs = par_map(replicas, |i| coupler.pair_at(x, y, t, &mut RngStream::new(seed, i)));
        let pairs = pairs.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(EmpiricalCoupling {
            pairs,
            seed_manifest: SeedManifest {
                seed,
                streams: 0..replicas,
            },
        })
    }

    pub fn from_pairs(pairs: Vec<PairSample>, seed_manifest: SeedManifest) -> Self {
        EmpiricalCoupling { pairs, seed_manifest }
    }

    pub fn pairs(&self) -> &[PairSample] {
        &self.pairs
    }

    pub fn replicas(&self) -> usize {
        self.pairs.len()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.pairs.len() as f64
    }

    pub fn seed_manifest(&self) -> &SeedManifest {
        &self.seed_manifest
    }
}

pub(crate) const MIN_REPLICAS: usize = 100;

/// Fraction of unmerged pairs and its binomial standard error.
pub fn empirical_mismatch(coupling: &EmpiricalCoupling) -> Result<(f64, f64)> {
    let n = coupling.replicas();
    if n < MIN_REPLICAS {
        return Err(Error::usage(format!("need at least {MIN_REPLICAS} replicas, got {n}")));
    }
    let apart = coupling.pairs.iter().filter(|p| !p.is_merged()).count();
    let p = apart as f64 / n as f64;
    Ok((p, (p * (1.0 - p) / n as f64).sqrt()))
}

/// Mismatch probability estimated without storing the pairs; same streams
/// as [`EmpiricalCoupling::sample`].
pub fn mismatch_probability(coupler: &Coupler, x: &Vector, y: &Vector, t: f64, replicas: u64, seed: u64) -> Result<(f64, f64)> {
    check_same_dim(x, y)?;
    if (replicas as usize) < MIN_REPLICAS {
        return Err(Error::usage(format!("need at least {MIN_REPLICAS} replicas, got {replicas}")));
    }
    // Probe once so argument errors surface as errors rather than NaN.
    coupler.pair_at(x, y, t, &mut RngStream::new(seed, 0))?;
    let m = par_moments(replicas, |i| {
        let pair = coupler.pair_at(x, y, t, &mut RngStream::new(seed, i)).expect("validated above");
        if pair.is_merged() {
            0.0
        } else {
            1.0
        }
    });
    let p = m.mean();
    Ok((p, (p * (1.0 - p) / replicas as f64).sqrt()))
}

/// Outcome of the Markovian maximality check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Characterization {
    /// Total variation at `t + s` from the starting pair.
    pub lhs: f64,
    /// Mean total variation at horizon `s` from the pairs drawn at time `t`.
    pub rhs: f64,
    pub std_error: f64,
    /// `(lhs - rhs) / std_error`.
    pub z: f64,
}

/// Compares `TV(t + s)` from `(x, y)` with the average of `TV(s)` from the
/// coupled positions at time `t`.
///
/// Equality holds for a Markovian maximal coupling; for any other coupling
/// the average is at least as large.
pub fn characterization_check(
    coupler: &Coupler,
    x: &Vector,
    y: &Vector,
    t: f64,
    s: f64,
    replicas: u64,
    seed: u64,
) -> Result<Characterization> {
    check_same_dim(x, y)?;
    for (v, name) in [(t, "t"), (s, "s")] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::usage(format!("{name} must be positive and finite, got {v}")));
        }
    }
    if replicas < 2 {
        return Err(Error::usage("replicas must be at least 2"));
    }
    let law = Law::of_coupler(coupler);
    let gap = x.distance(y);
    let lhs = law.tv(gap, t + s)?.value;
    if gap == 0.0 {
        return Ok(Characterization { lhs, rhs: 0.0, std_error: 0.0, z: 0.0 });
    }
    let curve = match law {
        Law::Brownian => None,
        Law::Subordinated(_) => Some(TvCurve::new(law, s, gap)?),
    };
    coupler.pair_at(x, y, t, &mut RngStream::new(seed, 0))?;
    let m = par_moments(replicas, |i| {
        let pair = coupler.pair_at(x, y, t, &mut RngStream::new(seed, i)).expect("validated above");
        if pair.is_merged() {
            return 0.0;
        }
        let d = pair.first().distance(pair.second());
        match &curve {
            None => super::tv::tv_gaussian_distance(d, s),
            Some(c) => c.eval(d).unwrap_or(f64::NAN),
        }
    });
    let rhs = m.mean();
    if !rhs.is_finite() {
        return Err(Error::numerical("characterization check", "non-finite average"));
    }
    let se = m.std_error();
    let diff = lhs - rhs;
    let z = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    Ok(Characterization { lhs, rhs, std_error: se, z })
}
