//! Per-splat radiance: PRT diffuse plus Cook-Torrance specular.
//!
//! ```text
//! c = ρ ⊙ (T · L)  +  Σ_i f(ωi, ωo, n) · max(n·ωi, 0) · I_i
//! ```
//!
//! `T · L` is the per-channel SH dot product of transport and lighting.

mod brdf;

use glam::DVec3;
use thiserror::Error;

pub use brdf::{
    fresnel_schlick, ggx_d, smith_g, smith_g1, specular_brdf, specular_factor, specular_factor_grad, SpecularGrad,
    ROUGHNESS_FLOOR,
};

use crate::lighting::{env_to_point_lights, LightCondition, PointLight};
use crate::scene::Splat;
use crate::sh::{project_delta_light, project_envmap, ShError, ShLightingRgb, MAX_COEFFS};

/// Base reflectance of the dielectric Fresnel term.
pub const DEFAULT_F0: f64 = 0.04;
/// Point lights drawn from an environment map for its specular term.
pub const DEFAULT_ENV_SAMPLES: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum ShadingError {
    #[error(transparent)]
    Sh(#[from] ShError),
    #[error("F0 = {0} outside [0, 1]")]
    BadF0(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialConstants {
    pub f0: f64,
}

impl MaterialConstants {
    pub fn new(f0: f64) -> Result<Self, ShadingError> {
        if (0.0..=1.0).contains(&f0) {
            Ok(Self { f0 })
        } else {
            Err(ShadingError::BadF0(f0))
        }
    }
}

impl Default for MaterialConstants {
    fn default() -> Self {
        Self { f0: DEFAULT_F0 }
    }
}

/// The relighting attributes of one splat in `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceAttrs {
    pub albedo: [f64; 3],
    pub normal: DVec3,
    pub roughness: f64,
    pub transport: [[f64; MAX_COEFFS]; 3],
    pub width: usize,
}

impl SurfaceAttrs {
    pub fn from_splat(s: &Splat) -> Self {
        let width = s.transport.width();
        let mut transport = [[0.0; MAX_COEFFS]; 3];
        for (c, row) in transport.iter_mut().enumerate() {
            for (dst, src) in row.iter_mut().zip(s.transport.row(c)) {
                *dst = *src as f64;
            }
        }
        Self {
            albedo: s.albedo_f64().to_array(),
            normal: s.normal_f64(),
            roughness: s.roughness as f64,
            transport,
            width,
        }
    }
}

/// A light condition reduced to what shading consumes: per-channel SH
/// lighting for the diffuse term and point lights for the specular term.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedLight {
    pub sh: ShLightingRgb,
    pub lights: Vec<PointLight>,
    /// False for SH-only conditions, which carry no specular term.
    pub specular_defined: bool,
}

impl PreparedLight {
    /// Environment maps are projected to SH for the diffuse term and
    /// importance-sampled into `env_samples` lights (seeded by `env_seed`)
    /// for the specular term.
    pub fn new(
        condition: &LightCondition,
        degree: u32,
        env_samples: usize,
        env_seed: u64,
    ) -> Result<Self, ShadingError> {
        Ok(match condition {
            LightCondition::PointSet(lights) => Self {
                sh: point_lights_to_sh(lights, degree)?,
                lights: lights.clone(),
                specular_defined: true,
            },
            LightCondition::Sh(sh) => {
                if sh.degree() != degree {
                    return Err(ShError::DegreeMismatch(sh.degree(), degree).into());
                }
                Self {
                    sh: sh.clone(),
                    lights: Vec::new(),
                    specular_defined: false,
                }
            }
            LightCondition::EnvMap(env) => Self {
                sh: project_envmap(env, degree)?,
                lights: env_to_point_lights(env, env_samples, env_seed),
                specular_defined: true,
            },
        })
    }

    pub fn with_defaults(condition: &LightCondition, degree: u32) -> Result<Self, ShadingError> {
        Self::new(condition, degree, DEFAULT_ENV_SAMPLES, 0)
    }
}

/// `Σ_i project_delta_light(ωi, Ii)`.
pub fn point_lights_to_sh(lights: &[PointLight], degree: u32) -> Result<ShLightingRgb, ShError> {
    let mut sh = ShLightingRgb::zeros(degree)?;
    for l in lights {
        sh.add_assign(&project_delta_light(l.direction, l.radiance, degree)?)?;
    }
    Ok(sh)
}

/// `ρ[c] · (T_c · L_c)` per channel.
pub fn diffuse_prt(splat: &Splat, light: &ShLightingRgb) -> Result<[f64; 3], ShError> {
    if splat.transport.degree() != light.degree() {
        return Err(ShError::DegreeMismatch(splat.transport.degree(), light.degree()));
    }
    Ok(diffuse_attrs(&SurfaceAttrs::from_splat(splat), light))
}

fn diffuse_attrs(a: &SurfaceAttrs, light: &ShLightingRgb) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let l = light.channels[c].as_slice();
        let dot: f64 = a.transport[c][..a.width].iter().zip(l).map(|(t, l)| t * l).sum();
        *o = a.albedo[c] * dot;
    }
    out
}

/// `Σ_i f(ωi, ωo, n) · max(n·ωi, 0) · I_i`.
pub fn specular_sum(splat: &Splat, lights: &[PointLight], wo: DVec3, consts: &MaterialConstants) -> [f64; 3] {
    specular_attrs(&SurfaceAttrs::from_splat(splat), lights, wo, consts.f0)
}

fn specular_attrs(a: &SurfaceAttrs, lights: &[PointLight], wo: DVec3, f0: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for l in lights {
        let (g, _) = specular_factor(l.direction, wo, a.normal, a.roughness, f0);
        if g != 0.0 {
            for c in 0..3 {
                out[c] += g * l.radiance[c];
            }
        }
    }
    out
}

/// Shaded radiance and whether a specular term was evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shaded {
    pub rgb: [f64; 3],
    pub specular_defined: bool,
}

/// Diffuse plus specular radiance of `splat` seen from direction `wo`
/// (unit, surface toward camera).
pub fn shade(splat: &Splat, light: &PreparedLight, wo: DVec3, consts: &MaterialConstants) -> Shaded {
    Shaded {
        rgb: shade_attrs(&SurfaceAttrs::from_splat(splat), light, wo, consts.f0),
        specular_defined: light.specular_defined,
    }
}

/// [`shade`] for an unprepared condition, with default environment sampling.
pub fn shade_condition(
    splat: &Splat,
    condition: &LightCondition,
    wo: DVec3,
    consts: &MaterialConstants,
) -> Result<Shaded, ShadingError> {
    let prepared = PreparedLight::with_defaults(condition, splat.transport.degree())?;
    Ok(shade(splat, &prepared, wo, consts))
}

pub fn shade_attrs(a: &SurfaceAttrs, light: &PreparedLight, wo: DVec3, f0: f64) -> [f64; 3] {
    let d = diffuse_attrs(a, &light.sh);
    let s = specular_attrs(a, &light.lights, wo, f0);
    [d[0] + s[0], d[1] + s[1], d[2] + s[2]]
}

/// Gradient of `upstream · shade_attrs(a)` with respect to the attributes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttrGrad {
    pub albedo: [f64; 3],
    pub normal: DVec3,
    pub roughness: f64,
    pub transport: [[f64; MAX_COEFFS]; 3],
}

impl Default for AttrGrad {
    fn default() -> Self {
        Self {
            albedo: [0.0; 3],
            normal: DVec3::ZERO,
            roughness: 0.0,
            transport: [[0.0; MAX_COEFFS]; 3],
        }
    }
}

pub fn shade_attrs_grad(a: &SurfaceAttrs, light: &PreparedLight, wo: DVec3, f0: f64, upstream: [f64; 3], out: &mut AttrGrad) {
    for c in 0..3 {
        let l = light.sh.channels[c].as_slice();
        let mut dot = 0.0;
        for j in 0..a.width {
            dot += a.transport[c][j] * l[j];
            out.transport[c][j] += upstream[c] * a.albedo[c] * l[j];
        }
        out.albedo[c] += upstream[c] * dot;
    }
    for p in &light.lights {
        let weight: f64 = (0..3).map(|c| upstream[c] * p.radiance[c]).sum();
        if weight == 0.0 {
            continue;
        }
        let (g, grad) = specular_factor_grad(p.direction, wo, a.normal, a.roughness, f0);
        if g != 0.0 {
            out.normal += grad.normal * weight;
            out.roughness += grad.sigma * weight;
        }
    }
}

/// Bit pattern of which backfacing clamps are active for each light.
pub fn specular_pattern(a: &SurfaceAttrs, light: &PreparedLight, wo: DVec3, f0: f64, mut sink: impl FnMut(u8)) {
    for p in &light.lights {
        sink(specular_factor(p.direction, wo, a.normal, a.roughness, f0).1);
    }
}
