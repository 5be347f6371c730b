mod bench;
mod fit;
mod gen_asset;
mod gradcheck;
mod metrics;
mod olat;
mod render;

use std::path::{Path, PathBuf};

use gsrelight::imageio::{encode_pfm, encode_png};
use gsrelight::raster::ImageBuffer;
use gsrelight::scene::HeadAsset;

pub use bench::{cmd_bench, BenchArgs};
pub use fit::{cmd_fit, parse_free, parse_weights, FitArgs};
pub use gen_asset::{cmd_gen_asset, AssetKind, GenAssetArgs};
pub use gradcheck::{cmd_check_gradients, CheckGradientsArgs};
pub use metrics::{cmd_metrics, MetricsArgs};
pub use olat::{cmd_olat, OlatArgs};
pub use render::{cmd_render, cmd_sweep, render_options, RenderArgs, SweepArgs};

use crate::error::CliError;

/// Output directory of one run; every file written goes through here.
#[derive(Debug)]
pub struct Output {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// `<stem>.pfm` (linear) and `<stem>.png` (gamma 2.2).
    pub fn image(&mut self, stem: &str, img: &ImageBuffer) -> Result<(String, String), CliError> {
        let linear = img.to_linear();
        let (pfm, png) = (format!("{stem}.pfm"), format!("{stem}.png"));
        self.write(&pfm, &encode_pfm(&linear))?;
        let bytes = encode_png(&linear).map_err(|e| CliError::Invariant(format!("png encoding: {e}")))?;
        self.write(&png, &bytes)?;
        Ok((pfm, png))
    }
}

pub fn load_asset(path: &Path) -> Result<HeadAsset, CliError> {
    Ok(HeadAsset::load(path)?)
}

/// Flags every subcommand shares.
#[derive(Debug, Clone)]
pub struct Common {
    pub out: PathBuf,
    pub seed: u64,
}
