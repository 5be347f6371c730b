use std::f64::consts::PI;
use std::path::Path;

use glam::DVec3;

use super::LightingError;
use crate::imageio;

/// Equirectangular (lat-long) radiance map.
///
/// Row 0 is the top of the map (`+y`, world up). The centre column faces the
/// frontal axis `+z`. For texel centre `(u, v) ∈ (0,1)²`:
///
/// ```text
/// θ = v·π            (polar angle from +y)
/// φ = 2π·u − π       (azimuth around +y, 0 at +z)
/// ω = (sin θ sin φ, cos θ, sin θ cos φ)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct EnvMap {
    width: usize,
    height: usize,
    texels: Vec<[f32; 3]>,
}

impl EnvMap {
    pub fn new(width: usize, height: usize, texels: Vec<[f32; 3]>) -> Result<Self, LightingError> {
        if width == 0 || height == 0 {
            return Err(LightingError::EmptyEnvMap);
        }
        if width < 4 || height < 2 {
            return Err(LightingError::EnvMapTooSmall { width, height });
        }
        if texels.len() != width * height {
            return Err(LightingError::EnvMapShape {
                expected: width * height,
                got: texels.len(),
            });
        }
        if let Some(i) = texels
            .iter()
            .position(|t| t.iter().any(|c| !c.is_finite() || *c < 0.0))
        {
            return Err(LightingError::InvalidEnvTexel(i));
        }
        Ok(Self {
            width,
            height,
            texels,
        })
    }

    pub fn constant(width: usize, height: usize, rgb: [f32; 3]) -> Result<Self, LightingError> {
        Self::new(width, height, vec![rgb; width * height])
    }

    /// Build a map by evaluating `f` at every texel-centre direction.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(DVec3) -> [f32; 3],
    ) -> Result<Self, LightingError> {
        let mut texels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                texels.push(f(texel_direction(width, height, col, row)));
            }
        }
        Self::new(width, height, texels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn texels(&self) -> &[[f32; 3]] {
        &self.texels
    }

    pub fn get(&self, col: usize, row: usize) -> [f64; 3] {
        self.texels[row * self.width + col].map(f64::from)
    }

    pub fn texel_direction(&self, col: usize, row: usize) -> DVec3 {
        texel_direction(self.width, self.height, col, row)
    }

    /// Solid angle of any texel in `row`: `(2π/W)(π/H) sin θ`.
    pub fn texel_solid_angle(&self, row: usize) -> f64 {
        let theta = (row as f64 + 0.5) * PI / self.height as f64;
        (2.0 * PI / self.width as f64) * (PI / self.height as f64) * theta.sin()
    }

    /// Nearest-texel lookup for a world direction.
    pub fn lookup(&self, dir: DVec3) -> [f64; 3] {
        let d = dir.normalize();
        let theta = d.y.clamp(-1.0, 1.0).acos();
        let phi = d.x.atan2(d.z);
        let u = (phi + PI) / (2.0 * PI);
        let v = theta / PI;
        let col = ((u * self.width as f64) as usize).min(self.width - 1);
        let row = ((v * self.height as f64) as usize).min(self.height - 1);
        self.get(col, row)
    }

    pub fn scaled(&self, s: f32) -> Self {
        Self {
            width: self.width,
            height: self.height,
            texels: self.texels.iter().map(|t| t.map(|c| c * s)).collect(),
        }
    }

    /// Rotate the environment about the vertical axis by `angle` radians.
    ///
    /// Columns are resampled with linear interpolation in azimuth (wrapping),
    /// so multiples of `2π/W` are exact shifts.
    pub fn rotated_y(&self, angle: f64) -> Self {
        let w = self.width as f64;
        let shift = angle / (2.0 * PI) * w;
        let mut texels = Vec::with_capacity(self.texels.len());
        for row in 0..self.height {
            let line = &self.texels[row * self.width..(row + 1) * self.width];
            for col in 0..self.width {
                let src = (col as f64 - shift).rem_euclid(w);
                let i0 = src.floor() as usize % self.width;
                let i1 = (i0 + 1) % self.width;
                let t = (src - src.floor()) as f32;
                let a = line[i0];
                let b = line[i1];
                texels.push([0, 1, 2].map(|c| {
                    if t == 0.0 {
                        a[c]
                    } else {
                        a[c] * (1.0 - t) + b[c] * t
                    }
                }));
            }
        }
        Self {
            width: self.width,
            height: self.height,
            texels,
        }
    }

    /// Load a portable float map (linear) or an 8-bit PNG (gamma 2.2 decoded).
    pub fn load(path: &Path) -> Result<Self, LightingError> {
        let img = imageio::load_linear(path)?;
        Self::new(img.width, img.height, img.rgb)
    }

    /// Built-in procedural maps used by the viewer and examples.
    pub fn preset(name: &str, width: usize, height: usize) -> Result<Self, LightingError> {
        let sun = |dir: DVec3, axis: DVec3, sharp: f64, rgb: [f32; 3]| -> [f32; 3] {
            let k = (dir.dot(axis).max(0.0)).powf(sharp) as f32;
            rgb.map(|c| c * k)
        };
        match name {
            "white" => Self::constant(width, height, [1.0; 3]),
            "sky" => Self::from_fn(width, height, |d| {
                let up = (0.5 + 0.5 * d.y) as f32;
                [0.35 + 0.4 * up, 0.45 + 0.45 * up, 0.6 + 0.6 * up]
            }),
            "sunset" => Self::from_fn(width, height, |d| {
                let s = sun(d, DVec3::new(-0.8, 0.2, 0.55).normalize(), 24.0, [9.0, 4.5, 1.5]);
                let ambient = [0.10, 0.08, 0.12];
                [0, 1, 2].map(|c| s[c] + ambient[c])
            }),
            "studio" => Self::from_fn(width, height, |d| {
                let key = sun(d, DVec3::new(0.6, 0.4, 0.7).normalize(), 40.0, [6.0, 6.0, 6.0]);
                let fill = sun(d, DVec3::new(-0.7, 0.1, 0.7).normalize(), 8.0, [0.6, 0.7, 1.0]);
                [0, 1, 2].map(|c| key[c] + fill[c] + 0.02)
            }),
            "split" => Self::from_fn(width, height, |d| {
                if d.x > 0.0 {
                    [1.2, 0.25, 0.15]
                } else {
                    [0.1, 0.3, 1.1]
                }
            }),
            other => Err(LightingError::UnknownPreset(other.to_string())),
        }
    }

    pub const PRESETS: [&'static str; 5] = ["white", "sky", "sunset", "studio", "split"];
}

pub(crate) fn texel_direction(width: usize, height: usize, col: usize, row: usize) -> DVec3 {
    let u = (col as f64 + 0.5) / width as f64;
    let v = (row as f64 + 0.5) / height as f64;
    let theta = v * PI;
    let phi = 2.0 * PI * u - PI;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    DVec3::new(st * sp, ct, st * cp)
}
