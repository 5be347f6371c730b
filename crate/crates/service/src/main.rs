use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;
use glam::DVec3;
use gsr_service::{router, AppState, AssetRegistry};
use gsrelight::scene::{generate_sphere_asset, generate_two_lobe_asset, TwoLobeParams};

#[derive(Debug, Parser)]
#[command(name = "gsr-serve", version, about = "Render service for the relighting viewer")]
struct Args {
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    #[arg(long, default_value_t = 8717)]
    port: u16,
    /// Directory of `.gsr` assets, served under their file stems.
    #[arg(long)]
    assets: Option<PathBuf>,
    /// Skip the generated `demo-sphere` and `demo-two-lobe` assets.
    #[arg(long)]
    no_demo: bool,
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let args = Args::parse();
    let mut registry = AssetRegistry::default();
    if let Some(dir) = &args.assets {
        registry.scan(dir)?;
    }
    if !args.no_demo {
        registry.insert("demo-sphere", generate_sphere_asset(6000, 1.0, [0.75, 0.55, 0.45], 0.35, 0)?);
        registry.insert(
            "demo-two-lobe",
            generate_two_lobe_asset(&TwoLobeParams {
                n_splats: 6000,
                main_radius: 1.0,
                lobe_radius: 0.5,
                lobe_center: DVec3::new(1.1, 0.6, 0.4),
                albedo: [0.7, 0.6, 0.5],
                roughness: 0.4,
                seed: 0,
            })?,
        );
    }
    let addr: SocketAddr = format!("{}:{}", args.bind, args.port).parse()?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {addr}");
    axum::serve(listener, router(AppState::new(registry))).await?;
    Ok(())
}
