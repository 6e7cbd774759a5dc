//! Configuration, orchestration and report files behind the `rwre` binary.
//!
//! A run reads an [`ExperimentConfig`] (JSON), executes one command or the
//! full report, and writes into the output directory:
//!
//! | file | content |
//! |---|---|
//! | `manifest.json` | config hash, seeds, every check with value and threshold |
//! | `timings.json` | wall-clock seconds per stage |
//! | `validation.json` | mass bounds and irreducibility certificate |
//! | `kernel_checks.json` | exact identities of the kernel and the environment chain |
//! | `nash.json` | connectivity power `m`, Nash and isoperimetric constants |
//! | `decay.csv` | `n,u_n,bound` |
//! | `gaussian_profile.csv` | `r2,p_max,bound` for the law of `X_n` from the origin |
//! | `decay.json` | slope, intercept, `C₁`, `C₃`, fit window |
//! | `corrector.csv` | `x0..,chi0..` per site |
//! | `lambda_sweep.csv` | `lambda,lambda_u_norm,cauchy_increment,increment_error` |
//! | `corrector.json` | `A`, eigenvalues, residuals, bound checks |
//! | `clt.csv` | `i,j,empirical,target,se,z` at the final horizon |
//! | `clt.json` | statistics at every checkpoint, occupation divergences |
//! | `path.csv` | `t,x0..` of one rescaled path |

mod config;
mod run;

pub use config::{seed_manifest, BuiltinSpec, ExperimentConfig, ModelSpec, Params, SeedEntry, SeedTable, COMMANDS};
pub use run::{emit_report, run, Check, RunManifest, StageRecord, Timings};

/// Process exit code for a finished run: 0 when every check passed, 2 otherwise.
pub fn exit_code(manifest: &RunManifest, report_ok: bool) -> i32 {
    if manifest.passed && report_ok {
        0
    } else {
        2
    }
}
