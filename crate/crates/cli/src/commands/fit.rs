use std::path::{Path, PathBuf};

use clap::Args;
use gsrelight::fit::{fit, trace_csv, FitConfig, FitTarget, FreeAttributes, LossWeights, MeshNormalField, DEFAULT_LR};
use gsrelight::imageio::load_linear;
use gsrelight::raster::{ImageBuffer, RenderOptions};
use gsrelight::scene::{Camera, TriangleMesh};

use super::{load_asset, Common, Output};
use crate::error::CliError;
use crate::manifest::Manifest;
use crate::args::read_text;

/// `all`, or a comma list of `normal`, `roughness`, `transport`, `albedo`.
pub fn parse_free(s: &str) -> Result<FreeAttributes, String> {
    if s == "all" {
        return Ok(FreeAttributes::ALL);
    }
    let mut free = FreeAttributes::NONE;
    for part in s.split(',').map(str::trim) {
        match part {
            "normal" => free.normal = true,
            "roughness" => free.roughness = true,
            "transport" => free.transport = true,
            "albedo" => free.albedo = true,
            other => return Err(format!("unknown attribute {other:?}")),
        }
    }
    Ok(free)
}

/// Comma list starting from the default weights. An item is `standard` or
/// `zero` (reset every weight) or `name=value` with name one of `img`,
/// `pyramid`, `tv_img`, `prt`, `normal_d`, `normal_tv`.
pub fn parse_weights(s: &str) -> Result<LossWeights, String> {
    let mut w = LossWeights::STANDARD;
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match item {
            "standard" => w = LossWeights::STANDARD,
            "zero" => w = LossWeights::ZERO,
            _ => {
                let (k, v) = item.split_once('=').ok_or_else(|| format!("expected name=value, got {item:?}"))?;
                let v: f64 = v.trim().parse().map_err(|_| format!("bad weight {v:?}"))?;
                if !(v.is_finite() && v >= 0.0) {
                    return Err(format!("weight {k} must be finite and non-negative"));
                }
                *match k.trim() {
                    "img" => &mut w.img,
                    "pyramid" => &mut w.pyramid,
                    "tv_img" => &mut w.tv_img,
                    "prt" => &mut w.prt,
                    "normal_d" => &mut w.normal_d,
                    "normal_tv" => &mut w.normal_tv,
                    other => return Err(format!("unknown loss term {other:?}")),
                } = v;
            }
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Initial asset; its geometry stays frozen.
    #[arg(long)]
    pub asset: PathBuf,
    /// OLAT manifest whose images are the fitting targets; repeatable.
    #[arg(long, required = true)]
    pub manifest: Vec<PathBuf>,
    /// Triangle mesh (OBJ) for normal distillation.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, default_value_t = DEFAULT_LR)]
    pub lr: f64,
    #[arg(long, value_parser = parse_free, default_value = "normal,roughness,transport")]
    pub free: FreeAttributes,
    #[arg(long, value_parser = parse_weights, default_value = "standard")]
    pub weights: LossWeights,
    /// Targets per iteration; all of them when absent.
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, default_value = "fitted")]
    pub name: String,
}

pub fn load_targets(manifest_path: &Path) -> Result<Vec<FitTarget>, CliError> {
    let manifest = Manifest::from_json(&read_text(manifest_path)?)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    manifest
        .images
        .iter()
        .map(|rec| {
            let camera = Camera::from_text(&rec.camera)?;
            let image = ImageBuffer::from_linear(&load_linear(&base.join(&rec.image))?);
            if (image.width, image.height) != (camera.width, camera.height) {
                return Err(CliError::Malformed(format!(
                    "{}: {}x{} image for a {}x{} camera",
                    rec.image, image.width, image.height, camera.width, camera.height
                )));
            }
            Ok(FitTarget {
                camera,
                condition: manifest.conditions[rec.condition].condition()?,
                image,
            })
        })
        .collect()
}

pub fn cmd_fit(args: &FitArgs, common: &Common) -> Result<Output, CliError> {
    if args.weights.normal_d > 0.0 && args.mesh.is_none() {
        return Err(CliError::Usage("normal distillation needs --mesh (or --weights normal_d=0)".into()));
    }
    let asset = load_asset(&args.asset)?;
    let mut targets = Vec::new();
    for m in &args.manifest {
        targets.extend(load_targets(m)?);
    }
    if targets.is_empty() {
        return Err(CliError::Malformed("manifests list no images".into()));
    }
    let mesh = match &args.mesh {
        Some(path) => Some(MeshNormalField::new(TriangleMesh::load_obj(path)?)?),
        None => None,
    };
    let cfg = FitConfig {
        iterations: args.iterations,
        lr: args.lr,
        free: args.free,
        seed: common.seed,
        batch_size: args.batch_size,
        render: RenderOptions::default(),
    };
    let result = fit(&asset, &targets, &cfg, &args.weights, mesh.as_ref())?;
    let mut out = Output::new(&common.out)?;
    out.write(&format!("{}.gsr", args.name), &result.asset.to_bytes())?;
    out.write(&format!("{}_loss.csv", args.name), trace_csv(&result.trace).as_bytes())?;
    if let (Some(first), Some(last)) = (result.trace.first(), result.trace.last()) {
        println!("loss {:.6e} -> {:.6e} over {} iterations", first.total, last.total, result.trace.len());
    }
    Ok(out)
}
