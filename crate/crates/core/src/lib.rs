//! Relightable 3D Gaussian splatting on the CPU.
//!
//! Each splat carries geometry (position, rotation, scale, opacity) and
//! relighting attributes (albedo, normal, roughness, SH transport). Its
//! colour under a light is a PRT diffuse term plus a Cook-Torrance specular
//! term; colours are splatted with front-to-back alpha compositing. With
//! geometry frozen, images are linear in the per-splat colours, which the
//! fitter uses to recover relighting attributes from images.

pub mod fit;
pub mod imageio;
pub mod lighting;
pub mod metrics;
pub mod raster;
pub mod scene;
pub mod sh;
pub mod shading;
