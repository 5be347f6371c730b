//! The JSON manifest written next to an OLAT stack.

use gsrelight::lighting::{LightCondition, PointLight};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightRecord {
    pub direction: [f64; 3],
    pub radiance: [f64; 3],
}

impl From<&PointLight> for LightRecord {
    fn from(l: &PointLight) -> Self {
        Self {
            direction: l.direction.to_array(),
            radiance: l.radiance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub index: usize,
    /// Rig indices of the lights that are on.
    pub active: Vec<usize>,
    pub lights: Vec<LightRecord>,
}

impl ConditionRecord {
    pub fn condition(&self) -> Result<LightCondition, CliError> {
        let lights = self
            .lights
            .iter()
            .map(|l| PointLight::new(glam::DVec3::from_array(l.direction), l.radiance))
            .collect::<Result<_, _>>()?;
        Ok(LightCondition::PointSet(lights))
    }
}

/// One rendered image: a condition seen from one view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub condition: usize,
    pub view: usize,
    /// Camera in its text form.
    pub camera: String,
    /// Linear float image, relative to the manifest.
    pub image: String,
    pub preview: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub mode: String,
    pub seed: u64,
    pub n_lights: usize,
    pub asset: String,
    pub conditions: Vec<ConditionRecord>,
    pub images: Vec<ImageRecord>,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let m: Manifest = serde_json::from_str(text)?;
        if m.schema_version != MANIFEST_VERSION {
            return Err(CliError::Malformed(format!(
                "manifest schema_version {} (expected {MANIFEST_VERSION})",
                m.schema_version
            )));
        }
        if let Some((i, c)) = m.conditions.iter().enumerate().find(|(i, c)| c.index != *i) {
            return Err(CliError::Malformed(format!("condition at position {i} has index {}", c.index)));
        }
        if let Some(bad) = m.images.iter().find(|i| i.condition >= m.conditions.len()) {
            return Err(CliError::Malformed(format!("image {} refers to missing condition {}", bad.image, bad.condition)));
        }
        Ok(m)
    }
}
