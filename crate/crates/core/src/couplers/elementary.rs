use std::str::FromStr;

use super::{check_time, normal_vector, PairSample};
use crate::error::{Error, Result};
use crate::geometry::{check_same_dim, Vector};
use crate::random::RngStream;

/// Time at which the switch coupling stops sharing increments.
pub const SWITCH_TIME: f64 = 1.0;

/// Couplings built from one shared Brownian increment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementaryKind {
    /// `(x + W, y + W)`.
    Synchronized,
    /// `(x + W, y - W)`, componentwise in `d > 1`.
    Antithetic,
    /// Synchronized up to [`SWITCH_TIME`], independent afterwards.
    Switch,
}

impl FromStr for ElementaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synchronized" => Ok(ElementaryKind::Synchronized),
            "antithetic" => Ok(ElementaryKind::Antithetic),
            "switch" => Ok(ElementaryKind::Switch),
            other => Err(Error::usage(format!("unknown elementary coupling '{other}'"))),
        }
    }
}

pub fn elementary_pair_at(
    kind: ElementaryKind,
    x: &Vector,
    y: &Vector,
    t: f64,
    stream: &mut RngStream,
) -> Result<PairSample> {
    check_same_dim(x, y)?;
    check_time(t)?;
    let dim = x.dim();
    let pair = match kind {
        ElementaryKind::Synchronized => {
            let w = normal_vector(dim, stream).scale(t.sqrt());
            PairSample::apart(x + &w, y + &w)
        }
        ElementaryKind::Antithetic => {
            let w = normal_vector(dim, stream).scale(t.sqrt());
            PairSample::apart(x + &w, y - &w)
        }
        ElementaryKind::Switch => {
            let shared = normal_vector(dim, stream).scale(t.min(SWITCH_TIME).sqrt());
            if t <= SWITCH_TIME {
                PairSample::apart(x + &shared, y + &shared)
            } else {
                let sd = (t - SWITCH_TIME).sqrt();
                let a = normal_vector(dim, stream).scale(sd);
                let b = normal_vector(dim, stream).scale(sd);
                PairSample::apart(&(x + &shared) + &a, &(y + &shared) + &b)
            }
        }
    };
    Ok(pair)
}
