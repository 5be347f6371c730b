//! Wire types. Every JSON message in either direction carries
//! `schema_version`; frames travel as binary PNG messages, each right after
//! a `frame` metadata message.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::session::EditError;

pub const SCHEMA_VERSION: u32 = 1;

fn one() -> f64 {
    1.0
}

fn white() -> [f64; 3] {
    [1.0; 3]
}

/// One directional light; radiance is `color · intensity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    /// Toward the light, world space; normalized on use.
    pub direction: [f64; 3],
    #[serde(default = "white")]
    pub color: [f64; 3],
    #[serde(default = "one")]
    pub intensity: f64,
}

/// A full light condition. Edits replace the current one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LightSpec {
    Points {
        lights: Vec<PointSpec>,
    },
    Env {
        preset: String,
        /// About the vertical axis, degrees.
        #[serde(default)]
        rotation_deg: f64,
        #[serde(default = "one")]
        intensity: f64,
    },
    Sh {
        degree: u32,
        /// Coefficients of r, g and b, `(degree + 1)²` each.
        coefficients: [Vec<f64>; 3],
    },
}

impl Default for LightSpec {
    /// One white light behind the default camera.
    fn default() -> Self {
        LightSpec::Points {
            lights: vec![PointSpec {
                direction: [0.0, 0.0, 1.0],
                color: white(),
                intensity: 1.0,
            }],
        }
    }
}

/// Orbit camera around the origin; angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitSpec {
    pub azimuth: f64,
    pub elevation: f64,
    pub distance: f64,
    pub fov: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for OrbitSpec {
    fn default() -> Self {
        Self {
            azimuth: 0.0,
            elevation: 0.0,
            distance: 4.0,
            fov: 40.0,
            width: 256,
            height: 256,
        }
    }
}

/// Partial orbit update; absent fields keep their value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitEdit {
    pub azimuth: Option<f64>,
    pub elevation: Option<f64>,
    pub distance: Option<f64>,
    pub fov: Option<f64>,
    pub width: Option<usize>,
    pub height: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialSpec {
    /// Multiplies every σ before clamping to `[0.01, 1]`; in `[0.1, 3]`.
    pub roughness_scale: f64,
    /// Multiplies every albedo before clamping to `[0, 1]`; each in `[0, 2]`.
    pub albedo_tint: [f64; 3],
}

impl Default for MaterialSpec {
    fn default() -> Self {
        Self {
            roughness_scale: 1.0,
            albedo_tint: [1.0; 3],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialEdit {
    pub roughness_scale: Option<f64>,
    pub albedo_tint: Option<[f64; 3]>,
}

/// Partial state update; absent parts are left as they are.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edit {
    pub light: Option<LightSpec>,
    pub camera: Option<OrbitEdit>,
    pub material: Option<MaterialEdit>,
    pub seed: Option<u64>,
}

/// Client to service, over the session socket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditMessage {
    pub schema_version: u32,
    /// Strictly increasing within a session.
    pub seq: u64,
    pub edit: Edit,
}

/// The effective session state, echoed with every frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub asset: String,
    pub camera: OrbitSpec,
    pub light: LightSpec,
    pub material: MaterialSpec,
    pub seed: u64,
    /// Sequence number of the last applied edit; 0 before any.
    pub seq: u64,
}

/// Service to client, over the session socket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    /// Sent for every edit message. `frame_seq` is the sequence of the frame
    /// that reflects it: the latest edit of the batch it was coalesced into.
    Ack { schema_version: u32, seq: u64, frame_seq: u64 },
    /// Precedes each binary PNG frame.
    Frame {
        schema_version: u32,
        seq: u64,
        /// Counts frames sent in this session.
        frame_index: u64,
        width: usize,
        height: usize,
        state: StateView,
    },
    /// A rejected message; the session state is unchanged.
    Error {
        schema_version: u32,
        seq: Option<u64>,
        field: String,
        message: String,
    },
}

impl ServerMessage {
    pub fn error(seq: Option<u64>, e: &EditError) -> Self {
        ServerMessage::Error {
            schema_version: SCHEMA_VERSION,
            seq,
            field: e.field.clone(),
            message: e.message.clone(),
        }
    }
}

/// `POST /render` body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderRequest {
    pub schema_version: u32,
    pub asset: String,
    #[serde(default)]
    pub camera: OrbitSpec,
    pub light: LightSpec,
    #[serde(default)]
    pub material: MaterialSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: ImageFormat,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageFormat {
    #[default]
    Png,
    /// Linear portable float map.
    Pfm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetInfo {
    pub id: String,
    pub loaded: bool,
    /// Known once loaded.
    pub splats: Option<usize>,
    pub sh_degree: Option<u32>,
}

/// `GET /assets` response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetList {
    pub schema_version: u32,
    pub assets: Vec<AssetInfo>,
}

/// `POST /assets/{id}/load` response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadResponse {
    pub schema_version: u32,
    /// Connect to `/ws/session/{session}`.
    pub session: String,
    pub asset: AssetInfo,
    pub state: StateView,
}

/// Body of every HTTP error response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub schema_version: u32,
    pub field: String,
    pub message: String,
}

/// Parse JSON, naming the offending field on failure.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, EditError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let message = e.inner().to_string();
        let mut path = e.path().to_string();
        // inside tagged enums the path stops at the parent of an unknown field,
        // and a missing field is reported at its parent
        let named = ["unknown field `", "missing field `"]
            .iter()
            .find_map(|p| message.strip_prefix(p))
            .and_then(|m| m.split('`').next());
        if let Some(name) = named {
            if path == "." {
                path = name.to_string();
            } else if path != name && !path.ends_with(&format!(".{name}")) {
                path = format!("{path}.{name}");
            }
        }
        EditError::new(if path == "." || path == "?" { "message" } else { &path }, message)
    })
}

pub fn check_version(v: u32) -> Result<(), EditError> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(EditError::new("schema_version", format!("expected {SCHEMA_VERSION}, got {v}")))
    }
}
