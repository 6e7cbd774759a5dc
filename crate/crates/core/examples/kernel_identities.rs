//! Assemble the torus kernel and check the exact identities: stochasticity,
//! invariance of the mass, reversibility of the symmetrised power, and the
//! adjoint identity on the environment chain.

use rwre::analysis::{adjoint_kernel, assemble_kernel, dirichlet_energy};
use rwre::corrector::{adjoint_identity_check, build_env_chain};
use rwre::env::{build_environment, square_triangle};

fn main() -> rwre::Result<()> {
    let env = build_environment(&square_triangle(0.5)?, 16, 7)?;
    let q = assemble_kernel(&env)?;
    println!("sites {} nonzeros {}", q.num_sites(), q.nnz());
    println!("row-sum error       {:.2e}", q.row_sum_error());
    println!("invariance residual {:.2e}", q.invariance_residual());

    let qstar = adjoint_kernel(&q)?;
    println!("Q* row-sum error    {:.2e}", qstar.row_sum_error());
    let sym = q.symmetrized_power(2)?;
    println!("(Q²)*Q² detailed balance error {:.2e}", sym.detailed_balance_error());

    let f: Vec<f64> = (0..q.num_sites()).map(|x| (x % 5) as f64).collect();
    println!("Dirichlet energy of a test function {:.4}", dirichlet_energy(&sym, &f));

    let chain = build_env_chain(&env)?;
    let check = adjoint_identity_check(&chain, 100, 1);
    println!(
        "⟨Rf, g⟩ = ⟨f, R*g⟩ over 100 pairs, max residual {:.2e}",
        check.max_residual
    );
    Ok(())
}
