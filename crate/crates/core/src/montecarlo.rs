//! Replica sharding with a reduction order that does not depend on the
//! number of worker threads.
//!
//! Replicas are grouped into fixed-size chunks; each chunk is accumulated
//! sequentially and the chunk results are merged in chunk order. Running
//! the same job on 1 or 64 threads therefore yields bit-identical sums.

use rayon::prelude::*;

/// Replicas per chunk.
pub const CHUNK: u64 = 4096;

/// Runs `step(acc, i)` for every replica `i < n` and merges the per-chunk
/// accumulators in order.
pub fn par_reduce<A, I, F, M>(n: u64, init: I, step: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, u64) + Sync,
    M: Fn(A, A) -> A,
{
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let end = ((c + 1) * CHUNK).min(n);
            for i in c * CHUNK..end {
                step(&mut acc, i);
            }
            acc
        })
        .collect();
    partials.into_iter().fold(init(), merge)
}

/// Runs `f(i)` for every replica and returns the results in replica order.
pub fn par_map<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Running sums for a sample mean and its standard error.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(mut self, other: Moments) -> Moments {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        self.sum / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Runs `value(i)` over `n` replicas and returns the moments of the values.
pub fn par_moments<F>(n: u64, value: F) -> Moments
where
    F: Fn(u64) -> f64 + Sync,
{
    par_reduce(n, Moments::default, |m, i| m.push(value(i)), Moments::merge)
}
