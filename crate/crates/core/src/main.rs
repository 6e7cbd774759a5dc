use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rwre::cli::{emit_report, exit_code, run, ExperimentConfig, COMMANDS};

/// Checks and experiments for random walks in cycle-represented random environments.
#[derive(Parser)]
#[command(name = "rwre", version)]
struct Args {
    /// One of validate, kernel-checks, nash, decay, corrector, clt, full-report.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(COMMANDS))]
    command: String,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output_dir`, then `rwre-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match execute(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rwre: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn execute(args: &Args) -> rwre::Result<i32> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| rwre::Error::Config(format!("cannot start {n} threads: {e}")))?;
    }
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.command = Some(args.command.clone());
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| "rwre-out".into());
    let (manifest, _) = run(&cfg, None, &out)?;
    let (text, ok) = emit_report(&manifest, &out);
    std::fs::write(out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(exit_code(&manifest, ok))
}
