//! Solve the corrector equation, verify it, compute the effective covariance
//! and check the sector and H₋₁ bounds. Ends with the torus covariance for
//! growing side lengths.

use rwre::corrector::{
    build_env_chain, covariance_matrix, h_minus_one_check, lambda_sweep, local_drift, poisson_solve,
    poisson_solve_dense, sector_condition_check, DEFAULT_TOL,
};
use rwre::env::{build_environment, square_triangle};

fn main() -> rwre::Result<()> {
    let env = build_environment(&square_triangle(0.5)?, 16, 7)?;
    let chain = build_env_chain(&env)?;
    let drift = local_drift(&chain);
    let field = poisson_solve(&chain, &drift, DEFAULT_TOL)?;
    let r = &field.residuals;
    println!(
        "poisson {:.1e}  cocycle {:.1e}  drift cancellation {:.1e}  sweeps {}",
        r.poisson, r.cocycle, r.drift_cancellation, r.sweeps
    );

    let dense = poisson_solve_dense(&chain, &drift)?;
    let gap = field
        .u
        .iter()
        .flatten()
        .zip(dense.u.iter().flatten())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    println!("iterative vs dense LU: {gap:.1e}");

    let cov = covariance_matrix(&chain, &field)?;
    println!("A = {:?}", cov.a);
    println!("eigenvalues {:?}", cov.eigenvalues);

    for row in lambda_sweep(&chain, &drift, &[1e-1, 1e-2, 1e-3], Some(&field))? {
        println!(
            "λ = {:.0e}  ‖λ u_λ‖ = {:.3e}  increment error {:.3e}",
            row.lambda,
            row.lambda_u_norm,
            row.increment_error.unwrap_or(f64::NAN)
        );
    }

    let sector = sector_condition_check(&chain, 1000, 3);
    let h = h_minus_one_check(&chain, &drift, &[0.0, 1.0], 1000, 4)?;
    println!(
        "sector ratio {:.3} ≤ {}   H₋₁ ratio {:.3} ≤ {}",
        sector.max_ratio, sector.bound, h.max_ratio, h.bound
    );

    for side in [8, 16, 32, 64] {
        let env = build_environment(&square_triangle(0.5)?, side, 7)?;
        let chain = build_env_chain(&env)?;
        let field = poisson_solve(&chain, &local_drift(&chain), DEFAULT_TOL)?;
        let a = covariance_matrix(&chain, &field)?.a;
        println!(
            "L = {side:2}  A = [[{:.4}, {:.4}], [{:.4}, {:.4}]]",
            a[0][0], a[0][1], a[1][0], a[1][1]
        );
    }
    Ok(())
}
