//! Closed forms and quadrature for total variation, transition densities
//! and coupling diagnostics.

pub(crate) mod clock;
mod concavity;
pub(crate) mod empirical;
mod ot;
pub(crate) mod tv;

pub use clock::clock_expectation;
pub use concavity::concavity_check;
pub use empirical::{
    characterization_check, empirical_mismatch, mismatch_probability, Characterization, EmpiricalCoupling,
    SeedManifest,
};
pub use ot::{discrete_ot, plan_cost, DiscreteMeasure, OtSolution, MAX_ATOMS};
pub use tv::{
    positive_part_mass, radial_transition_density, tv_gaussian, tv_subordinated, tv_subordinated_mixture, Law,
    TvCurve,
};
