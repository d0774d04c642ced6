use super::{check_time, normal_vector, PairSample, PathSkeleton};
use crate::error::{Error, Result};
use crate::geometry::{check_same_dim, make_frame, reflect_unchecked, MirrorFrame, Vector};
use crate::random::{inverse_gaussian, RngStream};

/// Reflection coupling started from a fixed pair.
///
/// The first leg is a Brownian motion from `x`; the second is its mirror
/// image across the plane between `x` and `y` until the first leg reaches
/// that plane, and coincides with it afterwards.
#[derive(Clone, Debug)]
pub struct ReflectionCoupling {
    frame: MirrorFrame,
}

impl ReflectionCoupling {
    pub fn new(x: &Vector, y: &Vector) -> Result<Self> {
        Ok(ReflectionCoupling {
            frame: make_frame(x, y)?,
        })
    }

    pub fn frame(&self) -> &MirrorFrame {
        &self.frame
    }

    /// Exact draw of the pair at time `t`.
    pub fn pair_at(&self, t: f64, stream: &mut RngStream) -> PairSample {
        let x = self.frame.x();
        let z = normal_vector(x.dim(), stream);
        let sd = t.sqrt();
        let first = x.axpy(sd, &z);
        if self.frame.is_degenerate() {
            return PairSample::merged(first, Some(0.0));
        }
        let start = self.frame.half_gap();
        let end = start + sd * z.dot(self.frame.normal().expect("non-degenerate"));
        match plane_crossing(start, end, t, stream) {
            Some(tau) => PairSample::merged(first, Some(tau)),
            None => {
                let second = reflect_unchecked(&self.frame, &first);
                PairSample::apart(first, second)
            }
        }
    }

    /// Pair observed on `grid` (strictly increasing, positive).
    pub fn path(&self, grid: &[f64], stream: &mut RngStream) -> Result<PathSkeleton> {
        check_grid(grid)?;
        let ops: Vec<f64> = grid.to_vec();
        Ok(self.path_in_operational_time(grid, &ops, false, stream))
    }

    /// Runs the coupling at nondecreasing operational times `ops` and records
    /// the states against `times`. With `absorb_on_grid`, the absorption time
    /// reported is the first `times[k]` at which the legs are merged rather
    /// than the crossing time itself.
    pub(crate) fn path_in_operational_time(
        &self,
        times: &[f64],
        ops: &[f64],
        absorb_on_grid: bool,
        stream: &mut RngStream,
    ) -> PathSkeleton {
        let dim = self.frame.dim();
        let mut first = self.frame.x().clone();
        let mut states = Vec::with_capacity(times.len());
        let mut absorbed_at = if self.frame.is_degenerate() { Some(0.0) } else { None };
        let mut crossing: Option<f64> = absorbed_at;
        let mut distance = self.frame.half_gap();
        let mut prev_op = 0.0;
        for (&t, &op) in times.iter().zip(ops) {
            let dt = op - prev_op;
            if dt > 0.0 {
                let z = normal_vector(dim, stream);
                let sd = dt.sqrt();
                first = first.axpy(sd, &z);
                if crossing.is_none() {
                    let normal = self.frame.normal().expect("non-degenerate");
                    let end = distance + sd * z.dot(normal);
                    if let Some(tau) = plane_crossing(distance, end, dt, stream) {
                        crossing = Some(prev_op + tau);
                        absorbed_at = Some(if absorb_on_grid { t } else { prev_op + tau });
                    }
                    distance = end;
                }
            }
            prev_op = op;
            let state = match crossing {
                Some(_) => PairSample::merged(first.clone(), absorbed_at),
                None => PairSample::apart(first.clone(), reflect_unchecked(&self.frame, &first)),
            };
            states.push(state);
        }
        PathSkeleton {
            times: times.to_vec(),
            states,
            absorbed_at,
        }
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::usage("time grid must not be empty"));
    }
    if !(grid[0] > 0.0) || grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::usage("time grid must start after 0 and be finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::usage("time grid must be strictly increasing"));
    }
    Ok(())
}

/// Decides whether a one-dimensional Brownian path that moves from signed
/// distance `start > 0` to `end` over `dt` crossed zero, and if so returns
/// the crossing time offset.
///
/// Crossing given the endpoints has probability `exp(-2 start end / dt)`
/// (or 1 if `end <= 0`). Given a crossing, `r = tau / (dt - tau)` is
/// inverse Gaussian with mean `start / |end|` and shape `start^2 / dt`.
pub(crate) fn plane_crossing(start: f64, end: f64, dt: f64, stream: &mut RngStream) -> Option<f64> {
    if start <= 0.0 {
        return Some(0.0);
    }
    if end > 0.0 {
        let p = (-2.0 * start * end / dt).exp();
        if stream.open01() >= p {
            return None;
        }
    }
    let gap = end.abs();
    let mean = if gap > 0.0 { start / gap } else { f64::INFINITY };
    let r = inverse_gaussian(mean, start * start / dt, stream);
    if r.is_infinite() {
        return Some(dt);
    }
    Some(dt * r / (1.0 + r))
}

/// Exact draw of the reflection coupling of Brownian motions from `x` and
/// `y` at time `t`.
pub fn reflection_pair_at(x: &Vector, y: &Vector, t: f64, stream: &mut RngStream) -> Result<PairSample> {
    check_same_dim(x, y)?;
    check_time(t)?;
    Ok(ReflectionCoupling::new(x, y)?.pair_at(t, stream))
}

/// Reflection coupling observed on a time grid.
pub fn reflection_path(x: &Vector, y: &Vector, grid: &[f64], stream: &mut RngStream) -> Result<PathSkeleton> {
    ReflectionCoupling::new(x, y)?.path(grid, stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::reflect;
    use crate::special::two_phi_minus_one;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn coincident_start_is_merged_at_time_zero() {
        let mut s = RngStream::new(0, 0);
        let p = reflection_pair_at(&v(&[0.0, 0.0]), &v(&[0.0, 0.0]), 1.3, &mut s).unwrap();
        assert!(p.is_merged());
        assert_eq!(p.coupling_time(), Some(0.0));
        let path = reflection_path(&v(&[0.5]), &v(&[0.5]), &[0.1, 0.2], &mut s).unwrap();
        assert_eq!(path.absorbed_at, Some(0.0));
        assert!(path.states.iter().all(|st| st.is_merged()));
    }

    #[test]
    fn bad_inputs() {
        let mut s = RngStream::new(0, 0);
        assert!(reflection_pair_at(&v(&[0.0]), &v(&[1.0]), 0.0, &mut s).is_err());
        assert!(reflection_pair_at(&v(&[0.0]), &v(&[1.0, 2.0]), 1.0, &mut s).is_err());
        assert!(reflection_path(&v(&[0.0]), &v(&[1.0]), &[], &mut s).is_err());
        assert!(reflection_path(&v(&[0.0]), &v(&[1.0]), &[0.5, 0.5], &mut s).is_err());
        assert!(reflection_path(&v(&[0.0]), &v(&[1.0]), &[0.0, 0.5], &mut s).is_err());
    }

    #[test]
    fn merge_probability_and_marginal_mean() {
        let (x, y) = (v(&[1.0, 0.0]), v(&[-1.0, 0.0]));
        let coupling = ReflectionCoupling::new(&x, &y).unwrap();
        let n = 1_000_000u64;
        let mut merged = 0u64;
        let mut sum = [0.0f64; 2];
        for i in 0..n {
            let mut s = RngStream::new(31, i);
            let p = coupling.pair_at(1.0, &mut s);
            if p.is_merged() {
                merged += 1;
                let tau = p.coupling_time().unwrap();
                assert!((0.0..=1.0).contains(&tau));
            } else {
                let back = reflect(coupling.frame(), p.first()).unwrap();
                assert_eq!(&back, p.second());
                assert!((p.second().distance(&y) - p.first().distance(&x)).abs() < 1e-10);
            }
            sum[0] += p.first()[0];
            sum[1] += p.first()[1];
        }
        let pm = merged as f64 / n as f64;
        assert!((pm - (1.0 - two_phi_minus_one(1.0))).abs() < 0.0015, "{pm}");
        assert!((sum[0] / n as f64 - 1.0).abs() < 0.004);
        assert!((sum[1] / n as f64).abs() < 0.004);
    }

    #[test]
    fn crossing_time_matches_hitting_law() {
        // Coupling times from the fixed-time sampler follow the law of the
        // first passage: P(tau <= s | tau <= t) for s < t.
        let coupling = ReflectionCoupling::new(&v(&[1.0]), &v(&[-1.0])).unwrap();
        let n = 400_000u64;
        let mut taus = Vec::new();
        for i in 0..n {
            let mut s = RngStream::new(77, i);
            if let Some(tau) = coupling.pair_at(2.0, &mut s).coupling_time() {
                taus.push(tau);
            }
        }
        for &s in &[0.25, 0.5, 1.0, 1.5] {
            let exact = 1.0 - two_phi_minus_one(1.0 / f64::sqrt(s));
            let emp = taus.iter().filter(|&&t| t <= s).count() as f64 / n as f64;
            let se = (exact * (1.0 - exact) / n as f64).sqrt();
            assert!((emp - exact).abs() < 4.0 * se, "s={s}: {emp} vs {exact}");
        }
    }

    #[test]
    fn path_absorption_and_grid_refinement() {
        let (x, y) = (v(&[1.0]), v(&[-1.0]));
        let coupling = ReflectionCoupling::new(&x, &y).unwrap();
        let coarse: Vec<f64> = (1..=4).map(|k| k as f64 * 0.25).collect();
        let fine: Vec<f64> = (1..=16).map(|k| k as f64 / 16.0).collect();
        let n = 1_000_000u64;
        let count = |grid: &[f64], seed: u64| {
            (0..n)
                .filter(|&i| {
                    let mut s = RngStream::new(seed, i);
                    coupling.path(grid, &mut s).unwrap().absorbed_by(1.0)
                })
                .count() as f64
                / n as f64
        };
        let exact = 1.0 - two_phi_minus_one(1.0);
        let pc = count(&coarse, 1);
        let pf = count(&fine, 2);
        assert!((pc - exact).abs() < 0.002, "coarse {pc}");
        assert!((pf - exact).abs() < 0.002, "fine {pf}");
        assert!((pc - pf).abs() < 0.002);
    }

    #[test]
    fn absorbed_paths_stay_on_diagonal() {
        let coupling = ReflectionCoupling::new(&v(&[0.3, 0.1]), &v(&[-0.2, 0.0])).unwrap();
        let grid: Vec<f64> = (1..=20).map(|k| k as f64 * 0.1).collect();
        for i in 0..2000 {
            let mut s = RngStream::new(5, i);
            let path = coupling.path(&grid, &mut s).unwrap();
            let mut seen = false;
            for st in &path.states {
                if seen {
                    assert!(st.is_merged());
                    assert_eq!(st.first(), st.second());
                }
                seen |= st.is_merged();
            }
            if let Some(a) = path.absorbed_at {
                assert!(a <= 2.0 + 1e-12);
            }
        }
    }
}
