//! `meta-ot` command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags, missing seed),
//! 2 on data errors (unreadable inputs, invalid configs, failed solves).

mod cache;
mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{KnnArgs, SlicingArgs, WowArgs};

#[derive(Debug, Parser)]
#[command(name = "meta-ot", version, about = "Sliced optimal transport between meta-measures")]
pub struct Cli {
    /// Master seed; required by every stochastic command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output CSV path; a JSON mirror is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Cache directory for cost and distance matrices [env: META_OT_CACHE].
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Print timing and cache lines to stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Double-sliced WoW between two manifests.
    Dsw {
        /// Manifest of the first meta-measure.
        a: PathBuf,
        /// Manifest of the second meta-measure.
        b: PathBuf,
        #[command(flatten)]
        slicing: SlicingArgs,
    },
    /// Exact Wasserstein-over-Wasserstein between two manifests.
    Wow {
        /// Manifest of the first meta-measure.
        a: PathBuf,
        /// Manifest of the second meta-measure.
        b: PathBuf,
        #[command(flatten)]
        inner: WowArgs,
    },
    /// Sliced-quantile WoW between two manifests of 1D samples.
    Sqw {
        /// Manifest of the first meta-measure.
        a: PathBuf,
        /// Manifest of the second meta-measure.
        b: PathBuf,
        #[command(flatten)]
        slicing: SlicingArgs,
    },
    /// KNN shape classification from SQW distances of local distance distributions.
    ShapeKnn {
        /// Labelled manifest of point clouds (.csv) or meshes (.off).
        manifest: PathBuf,
        /// Use shortest-path distances on mesh edges for .off inputs.
        #[arg(long)]
        geodesic: bool,
        #[command(flatten)]
        knn: KnnArgs,
        #[command(flatten)]
        slicing: SlicingArgs,
    },
    /// Point-cloud batch evaluation sweep.
    PointcloudEval { config: PathBuf },
    /// Perlin texture discrimination sweep on patch distributions.
    PatchEval { config: PathBuf },
    /// Monte Carlo convergence of squared DSW.
    McReport { config: PathBuf },
    /// Check dsw <= sliced WoW <= WoW on two manifests.
    BoundCheck { config: PathBuf },
    /// Generate Perlin textures as PGM files.
    GenPerlin { config: PathBuf },
}

/// Errors that map to exit code 1.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Error chain joined by `: `, skipping causes the previous message already quotes.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.ends_with(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
