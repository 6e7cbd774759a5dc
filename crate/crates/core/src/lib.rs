//! Random walks in random environments admitting a bounded cycle
//! representation.
//!
//! The walk on `Z^d` jumps from `x` along the edges of weighted translates of
//! finitely many closed lattice paths. Environments are periodized on a
//! torus, which makes the invariant measure, the corrector and the limiting
//! covariance exactly computable. The crate is organised as
//!
//! - [`env`]: cycles, models, sampled environments, step laws, assumption probes;
//! - [`analysis`]: torus kernels, adjoints, Dirichlet forms, Nash/isoperimetric
//!   checks, heat-kernel decay and Gaussian bound fits;
//! - [`corrector`]: the environment chain, resolvent and Poisson solves,
//!   sector and `H_{-1}` bounds, and the covariance matrix;
//! - [`montecarlo`]: quenched walks, the martingale residual and the CLT experiment;
//! - [`cli`]: configuration, orchestration and report files behind the `rwre` binary.

pub mod analysis;
pub mod cli;
pub mod corrector;
pub mod env;
pub mod error;
pub mod lattice;
pub mod montecarlo;
pub mod rng;

pub use error::{Error, Result};
