use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maxsurf::cli_reporting::{configure_threads, run_pipeline, CliError, RunConfig, RunOptions, Stage};

/// Numerical laboratory for maximal surfaces in H^{2,2}.
#[derive(Parser)]
#[command(name = "maxsurf", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for (lambda, mu2) and check the pointwise bounds.
    Solve(RunArgs),
    /// Solve, then integrate the frame and check the reconstruction.
    Reconstruct(RunArgs),
    /// Solve, reconstruct and measure normal slices of the convex hull.
    Slice(RunArgs),
    /// Solve, then fit decay rates and check the domain inequalities.
    Analyze(RunArgs),
    /// Every stage.
    All(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized sampling; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Treat failed soft checks as invariant failures.
    #[arg(long)]
    strict: bool,
}

fn run(stage: Stage, args: RunArgs) -> Result<(), CliError> {
    configure_threads()?;
    let cfg = RunConfig::load(&args.config)?;
    let opts = RunOptions {
        out_dir: args.out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("maxsurf-out")),
        seed: args.seed.unwrap_or(cfg.seed),
        strict: args.strict,
        config_dir: args.config.parent().map(PathBuf::from).unwrap_or_default(),
        timestamp: None,
    };
    let summary = run_pipeline(&cfg, stage, &opts)?;
    for w in &summary.report.status.soft_failures {
        eprintln!("warning: soft check failed: {w}");
    }
    for s in &summary.report.skipped {
        eprintln!("note: skipped {}: {}", s.item, s.reason);
    }
    println!("{} complete; wrote {} file(s) to {}", stage.name(), summary.artifacts.len(), opts.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, args) = match cli.command {
        Command::Solve(a) => (Stage::Solve, a),
        Command::Reconstruct(a) => (Stage::Reconstruct, a),
        Command::Slice(a) => (Stage::Slice, a),
        Command::Analyze(a) => (Stage::Analyze, a),
        Command::All(a) => (Stage::All, a),
    };
    match run(stage, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
