use std::path::PathBuf;

use clap::Args;
use gsrelight::imageio::load_linear;
use gsrelight::metrics::{psnr, ssim};
use gsrelight::raster::ImageBuffer;

use super::{Common, Output};
use crate::error::CliError;

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    /// Image pairs `reference test [reference test ...]` (.pfm or .png).
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
    #[arg(long, default_value = "metrics.csv")]
    pub name: String,
}

/// PSNR (dB, peak 1) and SSIM of each pair, printed and written as CSV.
pub fn cmd_metrics(args: &MetricsArgs, common: &Common) -> Result<Output, CliError> {
    if args.images.len() % 2 != 0 {
        return Err(CliError::Usage("images come in reference/test pairs".into()));
    }
    let mut csv = String::from("reference,test,psnr,ssim\n");
    println!("{:<32} {:<32} {:>9} {:>7}", "reference", "test", "psnr", "ssim");
    for pair in args.images.chunks(2) {
        let a = ImageBuffer::from_linear(&load_linear(&pair[0])?);
        let b = ImageBuffer::from_linear(&load_linear(&pair[1])?);
        let shape = |e: gsrelight::metrics::ShapeMismatch| CliError::Malformed(format!("{}: {e}", pair[1].display()));
        let p = psnr(&a, &b).map_err(shape)?;
        let s = ssim(&a, &b).map_err(shape)?;
        let (ra, rb) = (pair[0].display().to_string(), pair[1].display().to_string());
        println!("{ra:<32} {rb:<32} {p:>9.3} {s:>7.4}");
        csv.push_str(&format!("{ra},{rb},{p},{s}\n"));
    }
    let mut out = Output::new(&common.out)?;
    out.write(&args.name, csv.as_bytes())?;
    Ok(out)
}
