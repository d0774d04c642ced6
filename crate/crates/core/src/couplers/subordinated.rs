use super::reflection::{check_grid, ReflectionCoupling};
use super::{check_time, gaussian_step, PairSample, PathSkeleton};
use crate::error::Result;
use crate::geometry::{check_same_dim, Vector};
use crate::random::{RngStream, SubordinatorSpec};

/// Reflection-coupled Brownian motions run on the clock of a subordinator,
/// observed at time `t`.
///
/// The returned pair carries no coupling time: meeting happens at the real
/// time where the clock passes the Brownian crossing time, which a single
/// fixed-time draw does not reveal.
pub fn subordinated_reflection_pair_at(
    x: &Vector,
    y: &Vector,
    t: f64,
    spec: &SubordinatorSpec,
    stream: &mut RngStream,
) -> Result<PairSample> {
    check_same_dim(x, y)?;
    check_time(t)?;
    let clock = spec.increment(t, stream);
    if x == y {
        return Ok(PairSample::merged(gaussian_step(x, clock, stream), Some(0.0)));
    }
    if clock == 0.0 {
        return Ok(PairSample::apart(x.clone(), y.clone()));
    }
    let pair = ReflectionCoupling::new(x, y)?.pair_at(clock, stream);
    Ok(if pair.is_merged() {
        PairSample::merged(pair.into_parts().0, None)
    } else {
        pair
    })
}

/// Subordinated reflection coupling on a real-time grid.
///
/// The clock values `S_{t_k}` are accumulated from independent increments and
/// the reflection coupling is advanced in operational time, with the plane
/// crossing resolved exactly between clock values. The pair is reported
/// merged from the first grid time whose clock value has passed the
/// crossing time, and that grid time is the absorption time.
pub fn subordinated_reflection_path(
    x: &Vector,
    y: &Vector,
    grid: &[f64],
    spec: &SubordinatorSpec,
    stream: &mut RngStream,
) -> Result<PathSkeleton> {
    check_same_dim(x, y)?;
    check_grid(grid)?;
    let mut clock = 0.0;
    let mut prev = 0.0;
    let ops: Vec<f64> = grid
        .iter()
        .map(|&t| {
            clock += spec.increment(t - prev, stream);
            prev = t;
            clock
        })
        .collect();
    Ok(ReflectionCoupling::new(x, y)?.path_in_operational_time(grid, &ops, true, stream))
}
