//! The environment seen from the walker, the corrector and the covariance `A`.

mod bounds;
mod chain;
mod covariance;
mod solve;

pub use bounds::{h_minus_one_check, sector_condition_check, BoundCheck};
pub use chain::{adjoint_identity_check, build_env_chain, local_drift, AdjointCheck, DriftField, EnvChain};
pub use covariance::{covariance_matrix, lambda_sweep, symmetric_eigenvalues, Covariance, SweepRow};
pub use solve::{
    cocycle_residual, drift_cancellation_residual, path_sum, poisson_solve, poisson_solve_dense, resolvent_solve,
    CorrectorField, CorrectorResiduals, DEFAULT_TOL, MAX_SWEEPS,
};
