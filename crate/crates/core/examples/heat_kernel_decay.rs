//! On-diagonal decay of Qⁿ/π and the fitted Gaussian constant, written as CSV.
//!
//! ```text
//! cargo run --release --example heat_kernel_decay > decay.csv
//! ```

use rwre::analysis::{assemble_kernel, gaussian_bound_fit, ondiag_decay};
use rwre::env::{build_environment, square_triangle};

fn main() -> rwre::Result<()> {
    let env = build_environment(&square_triangle(0.5)?, 32, 1)?;
    let q = assemble_kernel(&env)?;
    let series = ondiag_decay(&q, 256)?;
    let fit = gaussian_bound_fit(&q, 256)?;
    eprintln!(
        "slope {:.4} over n in {:?}, C₁ = {:.4}, period {}, saturated at {:?}",
        series.slope, series.window, series.c1, series.period, series.saturated_at
    );
    eprintln!(
        "C₃ = {:.4} (tight at n = {}, r² = {})",
        fit.c3, fit.worst_n, fit.worst_r2
    );
    print!("{}", series.to_csv());
    Ok(())
}
