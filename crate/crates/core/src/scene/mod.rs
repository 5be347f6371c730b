//! Splats, assets, cameras, meshes and the synthetic asset generators.

mod asset;
mod camera;
mod generate;
mod mesh;
mod splat;

pub use asset::{AssetError, AssetMeta, HeadAsset, MAGIC, RENORMALIZE_TOLERANCE, VERSION};
pub use camera::{Camera, CameraError, Orbit};
pub use generate::{
    fibonacci_sphere, generate_sphere_asset, generate_two_lobe_asset, sphere_visibility, TwoLobeParams, FLATNESS,
    GENERATED_OPACITY,
};
pub use mesh::{MeshError, TriangleMesh};
pub use splat::{Splat, Transport, Violation, UNIT_TOLERANCE};
