use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use penalise::commands;
use penalise::config::{self, Overrides, RunConfig};

/// Sampler, integrator and verification suite for concatenated
/// bridge/Bessel path measures.
#[derive(Parser)]
#[command(name = "penalise", version, about)]
struct Cli {
    /// JSON configuration file (flags override its values)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Root seed (falls back to config, then PENALISE_SEED, then 42)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo paths per run / per check
    #[arg(long, global = true)]
    n_paths: Option<u64>,
    /// Grid spacing (default 2^-10)
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Path horizon (default 16)
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Worker threads (default: machine parallelism)
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw tilted samples and write (u, sign, g_check) summaries
    Simulate {
        /// Also dump this many full paths as CSV
        #[arg(long)]
        dump_paths: Option<u64>,
    },
    /// Decompose the integral of a step integrand over tilted samples
    Integrate {
        /// JSON file of (right_endpoint, level) pairs
        #[arg(long)]
        integrand: Option<PathBuf>,
        /// Times for the cumulative-integral trajectory
        #[arg(long, value_delimiter = ',')]
        t_grid: Option<Vec<f64>>,
    },
    /// Run the verification suite and write report.json / report.csv
    Verify {
        /// Run only these check ids (repeatable)
        #[arg(long = "check")]
        checks: Vec<String>,
        /// Scale deterministic tolerances (0 breaks every residual gate)
        #[arg(long)]
        tolerance_scale: Option<f64>,
    },
    /// Grid/time refinement table for one check
    Table {
        /// One of: bm_isometry, arcsine_last_exit, limit_ratio, lambda_cross
        #[arg(long)]
        check: String,
        /// Refinement levels (grid spacings, or times for limit_ratio)
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
    },
}

fn run() -> Result<i32> {
    let cli = Cli::parse();
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut flags = Overrides {
        seed: cli.seed,
        n_paths: cli.n_paths,
        dt: cli.dt,
        horizon: cli.horizon,
        workers: cli.workers,
        tolerance_scale: None,
        checks: None,
        dump_paths: None,
        integrand: None,
        t_grid: None,
        levels: None,
    };
    let subcommand = match &cli.cmd {
        Cmd::Simulate { dump_paths } => {
            flags.dump_paths = *dump_paths;
            "simulate"
        }
        Cmd::Integrate { integrand, t_grid } => {
            if let Some(path) = integrand {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading integrand {}", path.display()))?;
                let f = serde_json::from_str(&text)
                    .with_context(|| format!("parsing integrand {}", path.display()))?;
                flags.integrand = Some(f);
            }
            flags.t_grid = t_grid.clone();
            "integrate"
        }
        Cmd::Verify { checks, tolerance_scale } => {
            if !checks.is_empty() {
                flags.checks = Some(checks.clone());
            }
            flags.tolerance_scale = *tolerance_scale;
            "verify"
        }
        Cmd::Table { levels, .. } => {
            flags.levels = levels.clone();
            "table"
        }
    };
    let rc = config::resolve(subcommand, &cli.out, file, flags);
    if rc.workers > 0 {
        // Ignore "already initialized": tests and repeat calls share the pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(rc.workers).build_global();
    }
    match &cli.cmd {
        Cmd::Simulate { .. } => commands::cmd_simulate(&rc).map(|()| 0),
        Cmd::Integrate { .. } => commands::cmd_integrate(&rc).map(|()| 0),
        Cmd::Verify { .. } => commands::cmd_verify(&rc),
        Cmd::Table { check, .. } => commands::cmd_table(&rc, check).map(|()| 0),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
