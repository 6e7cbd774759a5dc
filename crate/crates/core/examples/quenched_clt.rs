//! Quenched CLT in a fixed environment: empirical covariance of X_N/√N against
//! the effective covariance, at several horizons.
//!
//! ```text
//! cargo run --release --example quenched_clt -- 20000
//! ```

use rwre::corrector::{build_env_chain, covariance_matrix, local_drift, poisson_solve, DEFAULT_TOL};
use rwre::env::{build_environment, square_triangle};
use rwre::montecarlo::clt_checkpoints;

fn main() -> rwre::Result<()> {
    let walkers = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let env = build_environment(&square_triangle(0.5)?, 16, 7)?;
    let chain = build_env_chain(&env)?;
    let field = poisson_solve(&chain, &local_drift(&chain), DEFAULT_TOL)?;
    let a = covariance_matrix(&chain, &field)?.a;
    println!("target A = {a:?}");
    for r in clt_checkpoints(&env, &field, &a, &[256, 1024, 4096], walkers, 11)? {
        println!(
            "N = {:5}  cov = {:?}  z = {:?}  corrector share {:.2e}  covariance ok {}",
            r.n,
            r.empirical_cov
                .iter()
                .map(|row| row.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            r.z_scores
                .iter()
                .flatten()
                .map(|z| (z * 100.0).round() / 100.0)
                .collect::<Vec<_>>(),
            r.corrector_share,
            r.covariance_ok()
        );
    }
    Ok(())
}
