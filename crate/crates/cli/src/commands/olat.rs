use std::path::PathBuf;

use clap::Args;
use gsrelight::lighting::{olat_protocol, OlatMode, OLAT_LIGHTS};
use gsrelight::raster::render_with;
use gsrelight::scene::Camera;

use super::{load_asset, Common, Output};
use crate::error::CliError;
use crate::manifest::{ConditionRecord, ImageRecord, LightRecord, Manifest, MANIFEST_FILE, MANIFEST_VERSION};
use crate::render_options;
use crate::args::{parse_mode, CameraArgs};

#[derive(Debug, Clone, Args)]
pub struct OlatArgs {
    /// Asset file written by `gen-asset` or a fit.
    #[arg(long)]
    pub asset: PathBuf,
    /// uniform, direction, random10 or random20.
    #[arg(long, value_parser = parse_mode)]
    pub mode: OlatMode,
    /// Lights on the hemisphere rig.
    #[arg(long, default_value_t = OLAT_LIGHTS)]
    pub lights: usize,
    #[command(flatten)]
    pub camera: CameraArgs,
    /// Views evenly spaced in azimuth, starting at the `--orbit` azimuth.
    #[arg(long, default_value_t = 1)]
    pub views: usize,
}

/// Render every protocol condition from every view and write the manifest.
pub fn cmd_olat(args: &OlatArgs, common: &Common) -> Result<Output, CliError> {
    if args.views == 0 {
        return Err(CliError::Usage("--views must be positive".into()));
    }
    if args.views > 1 && args.camera.camera.is_some() {
        return Err(CliError::Usage("--views > 1 needs an orbit camera, not --camera".into()));
    }
    let asset = load_asset(&args.asset)?;
    let cameras = (0..args.views)
        .map(|v| match args.camera.camera {
            Some(_) => args.camera.resolve(),
            None => {
                let azimuth = args.camera.orbit[0] + 360.0 * v as f64 / args.views as f64;
                Ok(Camera::orbit(&args.camera.orbit_at(azimuth), args.camera.width, args.camera.height)?)
            }
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let conditions = olat_protocol(args.mode, args.lights, common.seed)?;
    let opts = render_options(common.seed, false);
    let mut out = Output::new(&common.out)?;
    let mut images = Vec::with_capacity(conditions.len() * cameras.len());
    for (c, cond) in conditions.iter().enumerate() {
        let condition = cond.condition();
        for (v, camera) in cameras.iter().enumerate() {
            let img = render_with(&asset, camera, &condition, &opts)?;
            let (image, preview) = out.image(&format!("olat_c{c:03}_v{v:02}"), &img)?;
            images.push(ImageRecord {
                condition: c,
                view: v,
                camera: camera.to_text(),
                image,
                preview,
            });
        }
    }
    let manifest = Manifest {
        schema_version: MANIFEST_VERSION,
        mode: args.mode.name().to_string(),
        seed: common.seed,
        n_lights: args.lights,
        asset: args.asset.display().to_string(),
        conditions: conditions
            .iter()
            .enumerate()
            .map(|(index, c)| ConditionRecord {
                index,
                active: c.active.clone(),
                lights: c.lights.iter().map(LightRecord::from).collect(),
            })
            .collect(),
        images,
    };
    out.write(MANIFEST_FILE, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(out)
}
