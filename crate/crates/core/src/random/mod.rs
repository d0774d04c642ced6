//! Deterministic random streams and exact samplers for the primitive laws.
//!
//! Every stream is a ChaCha8 keystream keyed by a 64-bit seed and addressed by
//! a 64-bit stream id, so replica `i` of an experiment always reads the same
//! numbers no matter which thread runs it.

mod subordinator;

pub use subordinator::{
    stable_unit_cms, JumpFamily, JumpLaw, LevyMeasureKind, SubordinatorSpec,
};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// SplitMix64 finalizer; used to derive keys and sub-seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for a named purpose (a sub-experiment, a
/// time step, ...) from a parent seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix64(mix64(seed) ^ mix64(tag.wrapping_add(0xD1B5_4A32_D192_ED03)))
}

fn key_from_seed(seed: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        state = mix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    key
}

/// A counter-based random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::from_seed(key_from_seed(seed));
        inner.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u64 {
        self.inner.get_word_pos() as u64
    }

    /// Uniform draw in the open interval (0, 1).
    #[inline]
    pub fn open01(&mut self) -> f64 {
        loop {
            let u: f64 = self.inner.random();
            if u > 0.0 {
                return u;
            }
        }
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    #[inline]
    pub fn exp1(&mut self) -> f64 {
        -self.open01().ln()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// `n` i.i.d. standard normal draws.
pub fn std_normal(stream: &mut RngStream, n: usize) -> Vec<f64> {
    (0..n).map(|_| stream.normal()).collect()
}

/// First passage time of a standard one-dimensional Brownian motion to a
/// level at distance `a`, sampled exactly as `a^2 / Z^2`.
pub fn hitting_time(a: f64, stream: &mut RngStream) -> f64 {
    debug_assert!(a >= 0.0 && a.is_finite());
    if a == 0.0 {
        return 0.0;
    }
    let z = stream.normal();
    a * a / (z * z)
}

/// Inverse Gaussian draw with mean `mean` and shape `shape`.
///
/// Uses the Michael–Schucany–Haas transform with the small root computed as
/// `mean^2 / large_root`, which stays accurate when `mean` is huge (the
/// limit `mean -> inf` is the Lévy law `shape / Z^2`).
pub fn inverse_gaussian(mean: f64, shape: f64, stream: &mut RngStream) -> f64 {
    let z = stream.normal();
    let y = z * z;
    if !mean.is_finite() {
        return shape / y;
    }
    // Stable root: small = mean / (1 + q + sqrt(q^2 + 2q)) with q = mean y / (2 shape).
    let q = mean * y / (2.0 * shape);
    if !q.is_finite() {
        return shape / y;
    }
    let denom = 1.0 + q + q.sqrt() * (q + 2.0).sqrt();
    let small = mean / denom;
    // Choose small with probability mean / (mean + small).
    if stream.open01() * (1.0 + 1.0 / denom) <= 1.0 {
        small
    } else {
        mean * denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn same_stream_same_numbers() {
        let a = std_normal(&mut RngStream::new(7, 3), 2);
        let b = std_normal(&mut RngStream::new(7, 3), 2);
        assert_eq!(a, b);
        let c = std_normal(&mut RngStream::new(7, 4), 2);
        assert_ne!(a, c);
    }

    #[test]
    fn counter_advances() {
        let mut s = RngStream::new(1, 0);
        assert_eq!(s.counter(), 0);
        s.next_u64();
        assert_eq!(s.counter(), 2);
    }

    #[test]
    fn normal_moments() {
        let mut s = RngStream::new(11, 0);
        let n = 1_000_000;
        let xs = std_normal(&mut s, n);
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.004, "mean {mean}");
        assert!((var - 1.0).abs() < 0.005, "var {var}");
    }

    #[test]
    fn hitting_time_at_zero_level() {
        assert_eq!(hitting_time(0.0, &mut RngStream::new(0, 0)), 0.0);
    }

    #[test]
    fn hitting_time_survival_and_median() {
        let mut s = RngStream::new(5, 9);
        let n = 1_000_000;
        let mut ts: Vec<f64> = (0..n).map(|_| hitting_time(1.0, &mut s)).collect();
        let surv = ts.iter().filter(|&&t| t > 1.0).count() as f64 / n as f64;
        assert!((surv - 0.682689).abs() < 0.0015, "survival {surv}");
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = ts[n / 2];
        assert!((median - 2.1981).abs() < 0.01, "median {median}");
    }

    #[test]
    fn hitting_time_survival_grid() {
        let std = Normal::standard();
        let n = 200_000;
        for (k, &a) in [0.5, 1.0, 2.0].iter().enumerate() {
            let mut s = RngStream::new(21, k as u64);
            let ts: Vec<f64> = (0..n).map(|_| hitting_time(a, &mut s)).collect();
            for &t in &[0.25, 1.0, 4.0] {
                let p = 2.0 * std.cdf(a / f64::sqrt(t)) - 1.0;
                let emp = ts.iter().filter(|&&x| x > t).count() as f64 / n as f64;
                let se = (p * (1.0 - p) / n as f64).sqrt();
                assert!((emp - p).abs() < 3.0 * se + 1e-12, "a={a} t={t}: {emp} vs {p}");
            }
        }
    }

    #[test]
    fn inverse_gaussian_mean_and_levy_limit() {
        let mut s = RngStream::new(3, 1);
        let n = 400_000;
        let (mean, shape) = (0.7, 2.0);
        let xs: Vec<f64> = (0..n).map(|_| inverse_gaussian(mean, shape, &mut s)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let se = (mean.powi(3) / shape / n as f64).sqrt();
        assert!((m - mean).abs() < 4.0 * se, "{m}");
        // Huge mean behaves like shape / Z^2: P(X > shape) = P(|Z| < 1).
        let ys: Vec<f64> = (0..n).map(|_| inverse_gaussian(1e200, 1.0, &mut s)).collect();
        let frac = ys.iter().filter(|&&y| y > 1.0).count() as f64 / n as f64;
        assert!((frac - 0.682689).abs() < 0.004, "{frac}");
        assert!(ys.iter().all(|y| y.is_finite() && *y > 0.0));
    }
}
