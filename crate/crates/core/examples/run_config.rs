//! Drive a full experiment from a JSON config, exactly as the `rwre` binary does.
//!
//! ```text
//! cargo run --release --example run_config -- crates/core/configs/uniformly_elliptic.json /tmp/rwre-out
//! ```

use std::path::PathBuf;

use rwre::cli::{emit_report, run, seed_manifest, ExperimentConfig};

fn main() -> rwre::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/uniformly_elliptic.json").into());
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("rwre-example"));
    let cfg = ExperimentConfig::load(config.as_ref())?;
    for e in &seed_manifest(&cfg).entries {
        println!("seed {:16} {:24} {}", e.label, e.derivation, e.value);
    }
    let (manifest, timings) = run(&cfg, Some(cfg.command.as_deref().unwrap_or("full-report")), &out)?;
    for (stage, secs) in &timings.stages {
        println!("{stage:14} {secs:.2}s");
    }
    let (report, _) = emit_report(&manifest, &out);
    print!("{report}");
    Ok(())
}
