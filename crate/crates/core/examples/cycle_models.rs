//! Build each built-in cycle model on a small torus, validate it, and print
//! the step law at the origin.
//!
//! ```text
//! cargo run --example cycle_models
//! ```

use rwre::env::{build_environment, builtin, step_distribution, validate_assumptions, BUILTIN_MODELS};

fn main() -> rwre::Result<()> {
    for name in BUILTIN_MODELS {
        let model = builtin(name)?;
        let env = build_environment(&model, 16, 7)?;
        let report = validate_assumptions(&env, 8, 0.05)?;
        println!(
            "{name:20} cycles={} |Λ|={} mass in [{:.3}, {:.3}] certified N={:?}",
            model.cycles().len(),
            model.range_set().steps.len(),
            report.mass_bounds[0],
            report.mass_bounds[1],
            report.certified_n()
        );
        let law = step_distribution(&env, 0)?;
        for z in &model.range_set().steps {
            let p = law.prob(z);
            if p > 0.0 {
                println!("    p_{z:?}(ω) = {p:.4}");
            }
        }
    }
    Ok(())
}
