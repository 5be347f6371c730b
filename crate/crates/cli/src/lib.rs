//! `gsr`: batch front end of the relighting engine.
//!
//! Every subcommand writes into `--out` and is deterministic under `--seed`.
//! Failures map to distinct exit codes, see [`error`].

pub mod commands;
pub mod error;
pub mod manifest;
pub mod args;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{render_options, Common, Output};
pub use error::CliError;

/// Worker count cap, read once per run.
pub const THREADS_VAR: &str = "GSR_THREADS";

#[derive(Debug, Parser)]
#[command(name = "gsr", version, about = "Relightable Gaussian splatting on the CPU")]
pub struct Cli {
    /// Directory all outputs are written to.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed of every random choice: protocols, generators, env-map sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render one image pair (PNG and PFM).
    Render(commands::RenderArgs),
    /// Render frames while turning the environment map about the vertical axis.
    Sweep(commands::SweepArgs),
    /// Render a capture protocol and write its manifest.
    Olat(commands::OlatArgs),
    /// Fit relighting attributes to OLAT manifests with geometry frozen.
    Fit(commands::FitArgs),
    /// Compare analytic and finite-difference gradients of the fitting loss.
    CheckGradients(commands::CheckGradientsArgs),
    /// PSNR and SSIM of image pairs.
    Metrics(commands::MetricsArgs),
    /// Write a synthetic asset.
    GenAsset(commands::GenAssetArgs),
    /// Frames per second per resolution and splat count.
    Bench(commands::BenchArgs),
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got {v:?}"))),
        },
    }
}

/// Run one subcommand; returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Output, CliError> {
    let common = Common {
        out: cli.out.clone(),
        seed: cli.seed,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Invariant(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Render(a) => commands::cmd_render(a, &common),
        Command::Sweep(a) => commands::cmd_sweep(a, &common),
        Command::Olat(a) => commands::cmd_olat(a, &common),
        Command::Fit(a) => commands::cmd_fit(a, &common),
        Command::CheckGradients(a) => commands::cmd_check_gradients(a, &common),
        Command::Metrics(a) => commands::cmd_metrics(a, &common),
        Command::GenAsset(a) => commands::cmd_gen_asset(a, &common),
        Command::Bench(a) => commands::cmd_bench(a, &common),
    })
}
