//! Drives the full pipeline from library code, the way the `maxsurf` binary does, and
//! prints the report's bounds.
//!
//! Run with `cargo run --release --example run_preset -- [config] [out_dir]`.

use std::path::PathBuf;

use maxsurf::cli_reporting::{run_pipeline, RunConfig, RunOptions, Stage};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let config =
        args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/presets/barbot.json")));
    let out_dir = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("maxsurf-example"));

    let cfg = RunConfig::load(&config)?;
    let opts = RunOptions {
        out_dir: out_dir.clone(),
        seed: cfg.seed,
        strict: false,
        config_dir: config.parent().map(PathBuf::from).unwrap_or_default(),
        timestamp: None,
    };
    let summary = run_pipeline(&cfg, Stage::All, &opts)?;
    for (name, check) in &summary.report.bounds {
        println!("{name:>14} = {:+.6e}  ({} {:?})", check.value, check.check, check.tolerance);
    }
    println!("{} file(s) written to {}", summary.artifacts.len(), out_dir.display());
    Ok(())
}
