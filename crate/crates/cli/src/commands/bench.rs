use std::time::Instant;

use clap::Args;
use glam::DVec3;
use gsrelight::lighting::{LightCondition, PointLight};
use gsrelight::raster::{render_prepared, RenderOptions};
use gsrelight::scene::{generate_sphere_asset, Camera, Orbit};
use gsrelight::shading::PreparedLight;

use super::{Common, Output};
use crate::error::CliError;

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Square image sides.
    #[arg(long, value_delimiter = ',', default_values_t = [256, 512])]
    pub resolutions: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [10_000, 50_000])]
    pub splats: Vec<usize>,
    /// Timed frames per configuration, after one warm-up frame.
    #[arg(long, default_value_t = 5)]
    pub frames: usize,
    #[arg(long, default_value = "bench.csv")]
    pub name: String,
}

/// Frames per second of shading plus compositing, per resolution and splat
/// count, on a generated sphere under one frontal light.
pub fn cmd_bench(args: &BenchArgs, common: &Common) -> Result<Output, CliError> {
    if args.frames == 0 || args.resolutions.contains(&0) || args.splats.contains(&0) {
        return Err(CliError::Usage("--frames, --resolutions and --splats must be positive".into()));
    }
    let threads = rayon::current_num_threads();
    let opts = RenderOptions::default();
    let condition = LightCondition::PointSet(vec![PointLight::white(DVec3::Z)]);
    let mut csv = String::from("resolution,splats,threads,ms_per_frame,fps\n");
    println!("{:>10} {:>8} {:>7} {:>12} {:>8}", "resolution", "splats", "threads", "ms/frame", "fps");
    for &n in args.splats.iter() {
        let asset = generate_sphere_asset(n, 1.0, [0.6, 0.5, 0.45], 0.4, common.seed)?;
        let light = PreparedLight::new(&condition, asset.sh_degree(), opts.env_samples, opts.env_seed)
            .map_err(|e| CliError::Invariant(e.to_string()))?;
        for &res in args.resolutions.iter() {
            let camera = Camera::orbit(&Orbit::default(), res, res)?;
            render_prepared(&asset, &camera, &light, &opts);
            let start = Instant::now();
            for _ in 0..args.frames {
                render_prepared(&asset, &camera, &light, &opts);
            }
            let ms = start.elapsed().as_secs_f64() * 1e3 / args.frames as f64;
            let fps = 1e3 / ms;
            println!("{res:>10} {n:>8} {threads:>7} {ms:>12.2} {fps:>8.2}");
            csv.push_str(&format!("{res},{n},{threads},{ms:.3},{fps:.3}\n"));
        }
    }
    let mut out = Output::new(&common.out)?;
    out.write(&args.name, csv.as_bytes())?;
    Ok(out)
}
