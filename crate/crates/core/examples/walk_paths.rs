//! Simulate one walk, dump its path as CSV, evaluate the rescaled path at a
//! few fixed times, and compare occupation measures with the invariant law.

use rwre::env::{build_environment, uniformly_elliptic};
use rwre::montecarlo::{occupation_kl, path_functional, simulate_walk};

fn main() -> rwre::Result<()> {
    let env = build_environment(&uniformly_elliptic(0.5, 1.5)?, 16, 3)?;
    let n = 1024;
    let path = simulate_walk(&env, 0, n, 99)?;
    for (t, x) in [0.25, 0.5, 1.0]
        .iter()
        .zip(path_functional(&path, n, &[0.25, 0.5, 1.0])?)
    {
        eprintln!("β_N({t}) = {x:?}");
    }
    for (h, kl) in [1_000, 10_000, 100_000]
        .iter()
        .zip(occupation_kl(&env, &[1_000, 10_000, 100_000], 5)?)
    {
        eprintln!("occupation KL after {h:6} steps: {kl:.4}");
    }
    print!("{}", path.to_csv(n)?);
    Ok(())
}
