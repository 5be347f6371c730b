use clap::{Args, ValueEnum};
use glam::DVec3;
use gsrelight::scene::{generate_sphere_asset, generate_two_lobe_asset, TriangleMesh, TwoLobeParams};

use super::{Common, Output};
use crate::error::CliError;
use crate::args::parse_floats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AssetKind {
    /// One sphere at the origin.
    Sphere,
    /// A sphere with a second, smaller one that shadows it.
    TwoLobe,
}

#[derive(Debug, Clone, Args)]
pub struct GenAssetArgs {
    #[arg(long, value_enum, default_value_t = AssetKind::Sphere)]
    pub kind: AssetKind,
    #[arg(long, default_value_t = 2000)]
    pub splats: usize,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lobe_radius: f64,
    #[arg(long, value_parser = parse_floats::<3>, default_value = "1.1,0.6,0.4", allow_hyphen_values = true)]
    pub lobe_center: [f64; 3],
    #[arg(long, value_parser = parse_floats::<3>, default_value = "0.6,0.5,0.45")]
    pub albedo: [f64; 3],
    #[arg(long, default_value_t = 0.4)]
    pub roughness: f32,
    /// Also write an icosphere OBJ of the main sphere, for normal distillation.
    #[arg(long)]
    pub mesh: bool,
    #[arg(long, default_value = "asset")]
    pub name: String,
}

pub fn cmd_gen_asset(args: &GenAssetArgs, common: &Common) -> Result<Output, CliError> {
    let albedo = args.albedo.map(|c| c as f32);
    let asset = match args.kind {
        AssetKind::Sphere => generate_sphere_asset(args.splats, args.radius, albedo, args.roughness, common.seed)?,
        AssetKind::TwoLobe => generate_two_lobe_asset(&TwoLobeParams {
            n_splats: args.splats,
            main_radius: args.radius,
            lobe_radius: args.lobe_radius,
            lobe_center: DVec3::from_array(args.lobe_center),
            albedo,
            roughness: args.roughness,
            seed: common.seed,
        })?,
    };
    let mut out = Output::new(&common.out)?;
    out.write(&format!("{}.gsr", args.name), &asset.to_bytes())?;
    if args.mesh {
        let mesh = TriangleMesh::icosphere(4, args.radius, DVec3::ZERO);
        out.write(&format!("{}.obj", args.name), mesh.to_obj().as_bytes())?;
    }
    println!("{} splats, sh degree {}", asset.len(), asset.sh_degree());
    Ok(out)
}
