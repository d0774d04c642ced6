//! Markovian maximal couplings of Brownian motion and subordinated Brownian
//! motion: samplers, analytic checks and generator estimates.

pub mod analytics;
pub mod couplers;
pub mod error;
pub mod generatorlab;
pub mod geometry;
pub mod montecarlo;
pub mod quadrature;
pub mod random;
pub mod special;
pub mod stats;

pub use couplers::{Coupler, CouplerKind, PairSample, PathSkeleton};
pub use error::{Error, Result};
pub use geometry::{decompose, make_frame, reflect, MirrorFrame, Vector};
pub use random::{derive_seed, RngStream, SubordinatorSpec};

/// Every numerical tolerance used by the library, by name, for run manifests.
pub fn tolerance_record() -> Vec<(&'static str, f64)> {
    use analytics::{clock, empirical, tv};
    use generatorlab::{functions, levy};
    vec![
        ("tv.outer.abs", tv::OUTER_TOL.abs),
        ("tv.outer.rel", tv::OUTER_TOL.rel),
        ("tv.curve.nodes", tv::CURVE_NODES as f64),
        ("tv.curve.u_max", tv::CURVE_U_MAX),
        ("clock.inner.abs", clock::INNER_TOL.abs),
        ("clock.inner.rel", clock::INNER_TOL.rel),
        ("clock.stable_outer.abs", clock::STABLE_OUTER_TOL.abs),
        ("clock.stable_outer.rel", clock::STABLE_OUTER_TOL.rel),
        ("levy.density.abs", levy::DENSITY_TOL.abs),
        ("levy.density.rel", levy::DENSITY_TOL.rel),
        ("levy.table.nodes", levy::TABLE_NODES as f64),
        ("levy.outer.abs", levy::OUTER_TOL.abs),
        ("levy.outer.rel", levy::OUTER_TOL.rel),
        ("levy.inner.abs", levy::INNER_TOL.abs),
        ("levy.inner.rel", levy::INNER_TOL.rel),
        ("functions.self_check.points", functions::CHECK_POINTS as f64),
        ("functions.self_check.rel", functions::CHECK_REL_TOL),
        ("empirical.min_replicas", empirical::MIN_REPLICAS as f64),
        ("montecarlo.chunk", montecarlo::CHUNK as f64),
        ("couplers.switch_time", couplers::SWITCH_TIME),
    ]
}
