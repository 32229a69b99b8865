//! Configuration, pipeline orchestration and artifact emission for the `maxsurf` binary.
//!
//! A run reads a JSON [`RunConfig`], executes the requested stages in the fixed order
//! solve → reconstruct → slice → analyze, and writes flat files into the output directory:
//!
//! | file | contents |
//! |---|---|
//! | `fields.csv` | `x,y,lambda,mu2,u,v,mu1,K,detII,normII2` per node |
//! | `state.csv`, `state.json` | the solved state and its grid sidecar, re-loadable as a boundary file |
//! | `frame.csv` | `x,y` and the 25 frame entries per node |
//! | `slices.csv` | `x,y,theta,tau` per base point and direction |
//! | `report.json` | checks with their tolerances, the seed and a timestamp |
//! | `plotdata/*.csv` | `ρ` against fields, boundary lengths, slice volumes, residual history |
//!
//! Every file is written atomically. Exit codes: 0 success, 1 config error, 2 solver
//! non-convergence, 3 invariant failure, 4 I/O error.

pub mod config;
pub mod io;
mod pipeline;
pub mod report;

use std::path::PathBuf;

use thiserror::Error;

use crate::vortex_solver::SolverError;

pub use config::RunConfig;
pub use pipeline::{run_pipeline, RunOptions, RunSummary};
pub use report::{Checked, Report, Severity};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "MAXSURF_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("solver did not converge: {0}")]
    NonConvergence(SolverError),
    #[error("invariant checks failed: {}", .0.join(", "))]
    Invariant(Vec<String>),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 1,
            CliError::NonConvergence(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

/// Pipeline stages; each includes the stages it depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Solve,
    Reconstruct,
    Slice,
    Analyze,
    All,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Solve => "solve",
            Stage::Reconstruct => "reconstruct",
            Stage::Slice => "slice",
            Stage::Analyze => "analyze",
            Stage::All => "all",
        }
    }

    pub(crate) fn reconstructs(self) -> bool {
        matches!(self, Stage::Reconstruct | Stage::Slice | Stage::All)
    }

    pub(crate) fn slices(self) -> bool {
        matches!(self, Stage::Slice | Stage::All)
    }

    pub(crate) fn analyzes(self) -> bool {
        matches!(self, Stage::Analyze | Stage::All)
    }
}

/// Sizes the global worker pool from [`THREADS_ENV`] when it is set. Call once, before any
/// parallel work.
pub fn configure_threads() -> Result<Option<usize>, CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Config { field: THREADS_ENV.into(), message: format!("must be a positive integer, got `{raw}`") })?;
    // A pool that is already initialized keeps its size; the cap is best effort then.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}
