//! Cycle models, sampled environments and the step laws they induce.

mod cycle;
mod environment;
mod model;
mod steps;
mod validate;

pub use cycle::Cycle;
pub use environment::{build_environment, Environment};
pub use model::{
    builtin, random_conductance, square_triangle, triangle_triangle, uniformly_elliptic, Coupling, CycleModel,
    RangeSet, WeightLaw, BUILTIN_MODELS,
};
pub use steps::{mass_at, step_distribution, step_distribution_reversed, SiteLaws, StepDistribution};
pub use validate::{validate_assumptions, Irreducibility, ValidationReport};

/// `reverse_model`: reverse every cycle, keep laws and bounds.
pub fn reverse_model(model: &CycleModel) -> CycleModel {
    model.reversed()
}

/// `Λ` and its ℓ∞ radius.
pub fn range_set(model: &CycleModel) -> RangeSet {
    model.range_set()
}
