use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use gsrelight::lighting::LightCondition;
use gsrelight::raster::{render_with, RenderOptions};

use super::{load_asset, Common, Output};
use crate::error::CliError;
use crate::args::{CameraArgs, EnvArgs, LightArgs};

/// Options of a single render; `seed` drives env-map light sampling.
pub fn render_options(seed: u64, clamp_negative: bool) -> RenderOptions {
    RenderOptions {
        env_seed: seed,
        clamp_negative,
        ..RenderOptions::default()
    }
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// Asset file written by `gen-asset` or a fit.
    #[arg(long)]
    pub asset: PathBuf,
    #[command(flatten)]
    pub camera: CameraArgs,
    #[command(flatten)]
    pub light: LightArgs,
    /// Clamp negative shaded colours to zero.
    #[arg(long)]
    pub clamp_negative: bool,
    /// Stem of the output image pair.
    #[arg(long, default_value = "render")]
    pub name: String,
}

pub fn cmd_render(args: &RenderArgs, common: &Common) -> Result<Output, CliError> {
    let asset = load_asset(&args.asset)?;
    let camera = args.camera.resolve()?;
    let condition = args.light.resolve(common.seed)?;
    let img = render_with(&asset, &camera, &condition, &render_options(common.seed, args.clamp_negative))?;
    let mut out = Output::new(&common.out)?;
    out.image(&args.name, &img)?;
    Ok(out)
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Asset file written by `gen-asset` or a fit.
    #[arg(long)]
    pub asset: PathBuf,
    #[command(flatten)]
    pub camera: CameraArgs,
    #[command(flatten)]
    pub env: EnvArgs,
    /// Frames over one full turn of the environment.
    #[arg(long, default_value_t = 8)]
    pub frames: usize,
    #[arg(long)]
    pub clamp_negative: bool,
    #[arg(long, default_value = "sweep")]
    pub name: String,
}

/// Frame `k` of `n` sees the environment turned by `360·k/n` degrees.
pub fn cmd_sweep(args: &SweepArgs, common: &Common) -> Result<Output, CliError> {
    if args.frames == 0 {
        return Err(CliError::Usage("--frames must be positive".into()));
    }
    let env = args
        .env
        .resolve()?
        .ok_or_else(|| CliError::Usage("one of --env or --env-preset is required".into()))?;
    let asset = load_asset(&args.asset)?;
    let camera = args.camera.resolve()?;
    let opts = render_options(common.seed, args.clamp_negative);
    let mut out = Output::new(&common.out)?;
    for k in 0..args.frames {
        let angle = std::f64::consts::TAU * k as f64 / args.frames as f64;
        let condition = LightCondition::EnvMap(Arc::new(env.rotated_y(angle)));
        let img = render_with(&asset, &camera, &condition, &opts)?;
        out.image(&format!("{}_{k:03}", args.name), &img)?;
    }
    Ok(out)
}
