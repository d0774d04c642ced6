//! Shared fixtures for the benchmarks under `benches/`.

use mirrorlab_core::{SubordinatorSpec, Vector};

/// Start points at distance 2 along the first axis of `R^dim`.
pub fn unit_pair(dim: usize) -> (Vector, Vector) {
    let mut x = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    x[0] = 1.0;
    y[0] = -1.0;
    (Vector::from(x), Vector::from(y))
}

/// Half-stable clock with `phi(lambda) = sqrt(lambda)`; subordinated
/// Brownian motion is then Cauchy.
pub fn half_stable() -> SubordinatorSpec {
    SubordinatorSpec::stable(0.5, 1.0).expect("valid stable index")
}
