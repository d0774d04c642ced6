//! Generator-level checks: analytic and finite-difference generators of
//! Brownian couplings, Lévy densities of subordinated Brownian motion, the
//! mirror-coupled Lévy measure and its small-time estimator.

pub(crate) mod functions;
mod generator;
pub(crate) mod levy;

pub use functions::{self_check, Bilinear, CrossBump, GaussianBump, QuarticBump, TestFunction, Trig, Zero};
pub use generator::{analytic_generator, generator_fd_estimate, reflection_generator_apply, Extrapolation, Quotient};
pub use levy::{
    coupled_levy_measure, coupled_levy_terms, levy_density_radial, levy_integral, small_t_levy_estimate,
    subordinated_levy_density, IncrementSampler,
};
