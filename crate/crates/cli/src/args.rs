//! Camera and light arguments shared by the subcommands.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use glam::DVec3;
use gsrelight::lighting::{olat_protocol, parse_point_lights, parse_sh_lighting, EnvMap, LightCondition, OlatMode, OLAT_LIGHTS};
use gsrelight::scene::{Camera, Orbit};

use crate::error::CliError;

/// `a,b,c,...` with exactly `N` floats.
pub fn parse_floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got {s:?}"));
    }
    let mut out = [0.0f64; N];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse().map_err(|_| format!("bad number {p:?}"))?;
        if !o.is_finite() {
            return Err(format!("non-finite number {p:?}"));
        }
    }
    Ok(out)
}

/// `WxH`, both positive.
pub fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once('x').ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let dim = |t: &str| match t.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("bad dimension {t:?}")),
    };
    Ok((dim(w)?, dim(h)?))
}

pub fn parse_mode(s: &str) -> Result<OlatMode, String> {
    s.parse().map_err(|e: gsrelight::lighting::LightingError| e.to_string())
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, Args)]
pub struct CameraArgs {
    /// Camera file: `fx fy cx cy width height`, then three rows of `R | t`
    /// (world to camera, OpenCV axes). Replaces the orbit flags.
    #[arg(long, conflicts_with_all = ["orbit", "distance", "fov", "width", "height"])]
    pub camera: Option<PathBuf>,
    /// Orbit angles in degrees, `azimuth,elevation`. Azimuth 0 looks from +z.
    #[arg(long, value_parser = parse_floats::<2>, default_value = "0,0", allow_hyphen_values = true)]
    pub orbit: [f64; 2],
    #[arg(long, default_value_t = 4.0)]
    pub distance: f64,
    /// Vertical field of view in degrees.
    #[arg(long, default_value_t = 40.0)]
    pub fov: f64,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
}

impl CameraArgs {
    pub fn orbit_at(&self, azimuth: f64) -> Orbit {
        Orbit {
            azimuth,
            elevation: self.orbit[1],
            distance: self.distance,
            fov_y: self.fov,
            target: DVec3::ZERO,
        }
    }

    pub fn resolve(&self) -> Result<Camera, CliError> {
        match &self.camera {
            Some(path) => Ok(Camera::from_text(&read_text(path)?)?),
            None => Ok(Camera::orbit(&self.orbit_at(self.orbit[0]), self.width, self.height)?),
        }
    }
}

/// Environment source for `sweep`: a file or a built-in preset.
#[derive(Debug, Clone, Args)]
#[group(skip)]
pub struct EnvArgs {
    /// Equirectangular map (`.pfm` linear or `.png` gamma 2.2).
    #[arg(long, group = "envsource")]
    pub env: Option<PathBuf>,
    /// Built-in map: white, sky, sunset, studio or split.
    #[arg(long, group = "envsource")]
    pub env_preset: Option<String>,
    /// Resolution of preset maps.
    #[arg(long, value_parser = parse_size, default_value = "128x64")]
    pub env_size: (usize, usize),
}

impl EnvArgs {
    pub fn resolve(&self) -> Result<Option<EnvMap>, CliError> {
        Ok(match (&self.env, &self.env_preset) {
            (Some(path), _) => Some(EnvMap::load(path)?),
            (None, Some(name)) => Some(EnvMap::preset(name, self.env_size.0, self.env_size.1)?),
            (None, None) => None,
        })
    }
}

/// Exactly one light source per render.
#[derive(Debug, Clone, Args)]
#[group(skip)]
pub struct LightArgs {
    /// Point lights, one `x y z r g b` per line (direction toward the light).
    #[arg(long, group = "light")]
    pub lights: Option<PathBuf>,
    /// SH lighting: the degree, then the coefficients of R, G and B.
    #[arg(long, group = "light")]
    pub sh: Option<PathBuf>,
    #[command(flatten)]
    pub env: EnvArgs,
    /// Rotation of the environment about the vertical axis, in degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub env_rotation: f64,
    /// Capture protocol; `--condition` picks one of its conditions.
    #[arg(long, group = "light", value_parser = parse_mode)]
    pub protocol: Option<OlatMode>,
    #[arg(long, default_value_t = 0, requires = "protocol")]
    pub condition: usize,
}

impl LightArgs {
    pub fn resolve(&self, seed: u64) -> Result<LightCondition, CliError> {
        let sources = [
            self.lights.is_some(),
            self.sh.is_some(),
            self.env.env.is_some() || self.env.env_preset.is_some(),
            self.protocol.is_some(),
        ];
        match sources.iter().filter(|&&s| s).count() {
            1 => {}
            0 => {
                return Err(CliError::Usage(
                    "one of --lights, --sh, --env, --env-preset or --protocol is required".into(),
                ))
            }
            _ => return Err(CliError::Usage("give exactly one light source".into())),
        }
        if let Some(path) = &self.lights {
            return Ok(LightCondition::PointSet(parse_point_lights(&read_text(path)?)?));
        }
        if let Some(path) = &self.sh {
            return Ok(LightCondition::Sh(parse_sh_lighting(&read_text(path)?)?));
        }
        if let Some(mode) = self.protocol {
            let conditions = olat_protocol(mode, OLAT_LIGHTS, seed)?;
            let c = conditions.get(self.condition).ok_or_else(|| {
                CliError::Malformed(format!(
                    "condition {} out of range: {} has {} conditions",
                    self.condition,
                    mode.name(),
                    conditions.len()
                ))
            })?;
            return Ok(c.condition());
        }
        let env = self.env.resolve()?.expect("one source present");
        Ok(LightCondition::EnvMap(Arc::new(env.rotated_y(self.env_rotation.to_radians()))))
    }
}
