//! Session state, validation of edits, and rendering of the current state.

use std::sync::Arc;

use glam::DVec3;
use gsrelight::imageio::encode_png;
use gsrelight::lighting::{EnvMap, LightCondition, PointLight};
use gsrelight::raster::{render_with, ImageBuffer, RenderOptions};
use gsrelight::scene::{Camera, HeadAsset, Orbit};
use gsrelight::sh::{ShLightingRgb, ShVector, MAX_DEGREE};
use gsrelight::shading::ROUGHNESS_FLOOR;
use thiserror::Error;

use crate::schema::{
    check_version, parse, EditMessage, LightSpec, MaterialSpec, OrbitSpec, ServerMessage, StateView, SCHEMA_VERSION,
};

/// A rejected request: which field, and why.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{field}: {message}")]
pub struct EditError {
    pub field: String,
    pub message: String,
}

impl EditError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }

    fn under(self, prefix: &str) -> Self {
        Self {
            field: format!("{prefix}.{}", self.field),
            ..self
        }
    }
}

/// Resolution of environment presets; matches the batch renderer's default.
pub const ENV_SIZE: (usize, usize) = (128, 64);
pub const MAX_SIDE: usize = 2048;
pub const MAX_POINT_LIGHTS: usize = 64;
pub const ROUGHNESS_SCALE_RANGE: [f64; 2] = [0.1, 3.0];
pub const ALBEDO_TINT_MAX: f64 = 2.0;

fn finite(field: &str, v: f64) -> Result<f64, EditError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EditError::new(field, format!("{v} is not finite")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<f64, EditError> {
    if finite(field, v)? >= 0.0 {
        Ok(v)
    } else {
        Err(EditError::new(field, format!("{v} is negative")))
    }
}

pub fn build_camera(o: &OrbitSpec) -> Result<Camera, EditError> {
    finite("camera.azimuth", o.azimuth)?;
    if !(finite("camera.elevation", o.elevation)?.abs() < 90.0) {
        return Err(EditError::new("camera.elevation", format!("{} outside (-90, 90)", o.elevation)));
    }
    if !(finite("camera.distance", o.distance)? > 0.0) {
        return Err(EditError::new("camera.distance", "must be positive"));
    }
    if !(finite("camera.fov", o.fov)? > 0.0 && o.fov < 180.0) {
        return Err(EditError::new("camera.fov", format!("{} outside (0, 180)", o.fov)));
    }
    for (name, v) in [("camera.width", o.width), ("camera.height", o.height)] {
        if v == 0 || v > MAX_SIDE {
            return Err(EditError::new(name, format!("{v} outside [1, {MAX_SIDE}]")));
        }
    }
    let orbit = Orbit {
        azimuth: o.azimuth,
        elevation: o.elevation,
        distance: o.distance,
        fov_y: o.fov,
        target: DVec3::ZERO,
    };
    Camera::orbit(&orbit, o.width, o.height).map_err(|e| EditError::new("camera", e.to_string()))
}

/// The light condition of `spec` for an asset of SH `degree`.
pub fn build_light(spec: &LightSpec, degree: u32) -> Result<LightCondition, EditError> {
    match spec {
        LightSpec::Points { lights } => {
            if lights.is_empty() || lights.len() > MAX_POINT_LIGHTS {
                return Err(EditError::new(
                    "light.lights",
                    format!("{} lights, expected 1 to {MAX_POINT_LIGHTS}", lights.len()),
                ));
            }
            let out = lights
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    let f = |name: &str| format!("light.lights[{i}].{name}");
                    let intensity = non_negative(&f("intensity"), l.intensity)?;
                    let mut radiance = [0.0; 3];
                    for (r, c) in radiance.iter_mut().zip(l.color) {
                        *r = non_negative(&f("color"), c)? * intensity;
                    }
                    PointLight::new(DVec3::from_array(l.direction), radiance)
                        .map_err(|e| EditError::new(f("direction"), e.to_string()))
                })
                .collect::<Result<_, _>>()?;
            Ok(LightCondition::PointSet(out))
        }
        LightSpec::Env {
            preset,
            rotation_deg,
            intensity,
        } => {
            let rotation = finite("light.rotation_deg", *rotation_deg)?;
            let intensity = non_negative("light.intensity", *intensity)?;
            let env = EnvMap::preset(preset, ENV_SIZE.0, ENV_SIZE.1).map_err(|_| {
                EditError::new("light.preset", format!("unknown preset {preset:?}, expected one of {:?}", EnvMap::PRESETS))
            })?;
            let mut env = env.rotated_y(rotation.to_radians());
            if intensity != 1.0 {
                env = env.scaled(intensity as f32);
            }
            Ok(LightCondition::EnvMap(Arc::new(env)))
        }
        LightSpec::Sh {
            degree: d,
            coefficients,
        } => {
            if *d > MAX_DEGREE || *d != degree {
                return Err(EditError::new("light.degree", format!("{d}, the asset has degree {degree}")));
            }
            let mut rows = Vec::with_capacity(3);
            for (c, row) in coefficients.iter().enumerate() {
                if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                    return Err(EditError::new(format!("light.coefficients[{c}]"), format!("{v} is not finite")));
                }
                rows.push(
                    ShVector::from_slice(*d, row)
                        .map_err(|e| EditError::new(format!("light.coefficients[{c}]"), e.to_string()))?,
                );
            }
            let sh = ShLightingRgb::new(rows[0], rows[1], rows[2]).expect("rows share the degree");
            Ok(LightCondition::Sh(sh))
        }
    }
}

pub fn validate_material(m: &MaterialSpec) -> Result<(), EditError> {
    let [lo, hi] = ROUGHNESS_SCALE_RANGE;
    if !(lo..=hi).contains(&m.roughness_scale) {
        return Err(EditError::new(
            "material.roughness_scale",
            format!("{} outside [{lo}, {hi}]", m.roughness_scale),
        ));
    }
    for t in m.albedo_tint {
        if !(0.0..=ALBEDO_TINT_MAX).contains(&t) {
            return Err(EditError::new("material.albedo_tint", format!("{t} outside [0, {ALBEDO_TINT_MAX}]")));
        }
    }
    Ok(())
}

/// `asset` with σ scaled then clamped to `[0.01, 1]` and albedo tinted then
/// clamped to `[0, 1]`. The identity material returns `asset` itself.
pub fn apply_material(asset: &Arc<HeadAsset>, m: &MaterialSpec) -> Arc<HeadAsset> {
    if *m == MaterialSpec::default() {
        return asset.clone();
    }
    let splats = asset
        .splats()
        .iter()
        .map(|s| {
            let mut s = *s;
            s.roughness = (s.roughness as f64 * m.roughness_scale).clamp(ROUGHNESS_FLOOR, 1.0) as f32;
            let tint = DVec3::from_array(m.albedo_tint);
            s.albedo = (s.albedo_f64() * tint).clamp(DVec3::ZERO, DVec3::ONE).as_vec3();
            s
        })
        .collect();
    Arc::new(asset.with_splats(splats).expect("clamped attributes stay valid"))
}

/// Same options as the batch renderer.
pub fn render_options(seed: u64) -> RenderOptions {
    RenderOptions {
        env_seed: seed,
        ..RenderOptions::default()
    }
}

/// Render a fully described frame; shared by `POST /render` and sessions.
pub fn render_spec(
    asset: &Arc<HeadAsset>,
    camera: &OrbitSpec,
    light: &LightSpec,
    material: &MaterialSpec,
    seed: u64,
) -> Result<ImageBuffer, EditError> {
    let cam = build_camera(camera)?;
    let condition = build_light(light, asset.sh_degree())?;
    validate_material(material)?;
    let effective = apply_material(asset, material);
    render_with(&effective, &cam, &condition, &render_options(seed)).map_err(|e| EditError::new("light", e.to_string()))
}

/// One rendered frame: the metadata message and the PNG that follows it.
#[derive(Debug, Clone)]
pub struct Frame {
    pub meta: ServerMessage,
    pub png: Vec<u8>,
    pub image: ImageBuffer,
}

/// Everything needed to render a frame, detached from the session so it can
/// run on a blocking thread.
#[derive(Debug, Clone)]
pub struct RenderJob {
    asset: Arc<HeadAsset>,
    state: StateView,
    frame_index: u64,
}

impl RenderJob {
    pub fn run(self) -> Result<Frame, EditError> {
        let s = &self.state;
        // material was applied when the session state changed
        let image = render_spec(&self.asset, &s.camera, &s.light, &MaterialSpec::default(), s.seed)?;
        let png = encode_png(&image.to_linear()).map_err(|e| EditError::new("frame", e.to_string()))?;
        Ok(Frame {
            meta: ServerMessage::Frame {
                schema_version: SCHEMA_VERSION,
                seq: s.seq,
                frame_index: self.frame_index,
                width: image.width,
                height: image.height,
                state: self.state,
            },
            png,
            image,
        })
    }
}

/// State of one viewer session. Edits are validated as a whole and either
/// applied completely or not at all.
#[derive(Debug, Clone)]
pub struct Session {
    base: Arc<HeadAsset>,
    effective: Arc<HeadAsset>,
    state: StateView,
    frames: u64,
}

impl Session {
    pub fn new(asset_id: &str, asset: Arc<HeadAsset>) -> Self {
        Self {
            effective: asset.clone(),
            base: asset,
            state: StateView {
                asset: asset_id.to_string(),
                camera: OrbitSpec::default(),
                light: LightSpec::default(),
                material: MaterialSpec::default(),
                seed: 0,
                seq: 0,
            },
            frames: 0,
        }
    }

    pub fn state(&self) -> &StateView {
        &self.state
    }

    pub fn apply(&mut self, msg: &EditMessage) -> Result<(), EditError> {
        check_version(msg.schema_version)?;
        if msg.seq <= self.state.seq {
            return Err(EditError::new("seq", format!("{} does not exceed {}", msg.seq, self.state.seq)));
        }
        let mut next = self.state.clone();
        let edit = &msg.edit;
        if let Some(light) = &edit.light {
            build_light(light, self.base.sh_degree()).map_err(|e| e.under("edit"))?;
            next.light = light.clone();
        }
        if let Some(c) = edit.camera {
            let cam = &mut next.camera;
            cam.azimuth = c.azimuth.unwrap_or(cam.azimuth);
            cam.elevation = c.elevation.unwrap_or(cam.elevation);
            cam.distance = c.distance.unwrap_or(cam.distance);
            cam.fov = c.fov.unwrap_or(cam.fov);
            cam.width = c.width.unwrap_or(cam.width);
            cam.height = c.height.unwrap_or(cam.height);
            build_camera(cam).map_err(|e| e.under("edit"))?;
        }
        if let Some(m) = edit.material {
            let mat = &mut next.material;
            mat.roughness_scale = m.roughness_scale.unwrap_or(mat.roughness_scale);
            mat.albedo_tint = m.albedo_tint.unwrap_or(mat.albedo_tint);
            validate_material(mat).map_err(|e| e.under("edit"))?;
        }
        next.seed = edit.seed.unwrap_or(next.seed);
        next.seq = msg.seq;
        if next.material != self.state.material {
            self.effective = apply_material(&self.base, &next.material);
        }
        self.state = next;
        Ok(())
    }

    /// Parse and apply one socket message. On failure returns the sequence
    /// number if one could be read.
    pub fn apply_text(&mut self, text: &str) -> Result<u64, (Option<u64>, EditError)> {
        let seq = serde_json::from_str::<serde_json::Value>(text).ok().and_then(|v| v.get("seq")?.as_u64());
        let msg: EditMessage = parse(text).map_err(|e| (seq, e))?;
        self.apply(&msg).map_err(|e| (Some(msg.seq), e))?;
        Ok(msg.seq)
    }

    /// Snapshot of the current state for rendering; counts the frame.
    pub fn job(&mut self) -> RenderJob {
        self.frames += 1;
        RenderJob {
            asset: self.effective.clone(),
            state: self.state.clone(),
            frame_index: self.frames,
        }
    }

    pub fn render(&mut self) -> Result<Frame, EditError> {
        self.job().run()
    }
}
