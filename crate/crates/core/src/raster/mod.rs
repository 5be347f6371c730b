//! CPU splatting: projection, global depth sort, front-to-back alpha
//! compositing over 8×8 tiles, plus a brute-force path over all splats
//! for every pixel that serves as the reference.
//!
//! A splat touches a pixel when the squared Mahalanobis distance is at most
//! 9, with `α = min(o · exp(−m/2), 0.99)`. Compositing stops before the
//! splat that would push transmittance below `1e-4`.

mod cache;
mod composite;
mod image;
mod project;

use glam::DVec3;
use rayon::prelude::*;
use thiserror::Error;

pub use cache::{extract_weight_cache, WeightCache};
pub use composite::{Frame, ALPHA_MAX, TILE, T_MIN};
pub use image::ImageBuffer;
pub use project::{covariance_3d, project_splat, Projected, CUTOFF_SQ, DILATION, NEAR};

use crate::lighting::LightCondition;
use crate::scene::{Camera, HeadAsset};
use crate::shading::{shade_attrs, MaterialConstants, PreparedLight, ShadingError, SurfaceAttrs, DEFAULT_ENV_SAMPLES};

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error(transparent)]
    Shading(#[from] ShadingError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub material: MaterialConstants,
    /// Lights sampled from an environment map for its specular term.
    pub env_samples: usize,
    pub env_seed: u64,
    /// Clamp negative shaded colours (degree-2 ringing) to zero before
    /// compositing. Off by default so that images stay exactly linear in
    /// the lights.
    pub clamp_negative: bool,
    /// Use the tiled path; the brute-force path is the reference.
    pub tiled: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            material: MaterialConstants::default(),
            env_samples: DEFAULT_ENV_SAMPLES,
            env_seed: 0,
            clamp_negative: false,
            tiled: true,
        }
    }
}

/// Unit direction from a splat centre toward the camera centre.
pub fn view_direction(position: DVec3, camera: &Camera) -> DVec3 {
    (camera.center() - position).normalize_or(DVec3::Z)
}

/// Shade every splat once for this view.
pub fn splat_colors(asset: &HeadAsset, camera: &Camera, light: &PreparedLight, opts: &RenderOptions) -> Vec<[f64; 3]> {
    asset
        .splats()
        .par_iter()
        .map(|s| {
            let wo = view_direction(s.position_f64(), camera);
            let c = shade_attrs(&SurfaceAttrs::from_splat(s), light, wo, opts.material.f0);
            if opts.clamp_negative {
                c.map(|v| v.max(0.0))
            } else {
                c
            }
        })
        .collect()
}

/// Render with default options.
pub fn render(asset: &HeadAsset, camera: &Camera, condition: &LightCondition) -> Result<ImageBuffer, RenderError> {
    render_with(asset, camera, condition, &RenderOptions::default())
}

pub fn render_with(
    asset: &HeadAsset,
    camera: &Camera,
    condition: &LightCondition,
    opts: &RenderOptions,
) -> Result<ImageBuffer, RenderError> {
    let light = PreparedLight::new(condition, asset.sh_degree(), opts.env_samples, opts.env_seed)?;
    Ok(render_prepared(asset, camera, &light, opts))
}

pub fn render_prepared(asset: &HeadAsset, camera: &Camera, light: &PreparedLight, opts: &RenderOptions) -> ImageBuffer {
    let colors = splat_colors(asset, camera, light, opts);
    Frame::new(asset, camera).composite(&colors, opts.tiled)
}

/// Reference path: every splat is tested against every pixel.
pub fn render_brute(
    asset: &HeadAsset,
    camera: &Camera,
    condition: &LightCondition,
    opts: &RenderOptions,
) -> Result<ImageBuffer, RenderError> {
    render_with(asset, camera, condition, &RenderOptions { tiled: false, ..*opts })
}

/// Composite `(n + 1) / 2` with the same weights as [`render`].
pub fn render_normal_map(asset: &HeadAsset, camera: &Camera) -> ImageBuffer {
    Frame::new(asset, camera).composite(&normal_payload(asset), true)
}

pub fn normal_payload(asset: &HeadAsset) -> Vec<[f64; 3]> {
    asset
        .splats()
        .iter()
        .map(|s| ((s.normal_f64() + DVec3::ONE) * 0.5).to_array())
        .collect()
}
