//! Quenched walks, the martingale decomposition and the CLT experiment.

mod clt;
mod walk;

pub use clt::{
    clt_checkpoints, covariance_eigenvalues, empirical_gaussian_check, martingale_increment_covariance,
    martingale_residual, occupation_kl, quenched_clt_experiment, walker_seed, CltResult, GaussianProfile,
};
pub use walk::{path_functional, simulate_walk, StepSampler, WalkPath};
