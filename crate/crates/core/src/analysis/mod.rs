//! Kernel algebra on the torus and the decay/Nash verification battery.

mod assumption_a1;
mod decay;
mod dirichlet;
mod isoperimetric;
mod kernel;
mod nash;

pub use assumption_a1::{assumption_a1_check, constructive_power, search_a1_power, A1Outcome};
pub use decay::{
    for_each_power, gaussian_bound_fit, kernel_period, loglog_fit, ondiag_decay, DecaySeries, DecaySummary,
    GaussianFit, FIT_START,
};
pub use dirichlet::{dirichlet_energy, dirichlet_form};
pub use isoperimetric::{boundary_ratio, box_set, isoperimetric_check, IsoperimetricEstimate};
pub use kernel::{adjoint_kernel, assemble_kernel, TorusKernel};
pub use nash::{nash_estimate, nash_ratio, nash_recursion_check, NashCertificate, RecursionCheck};
