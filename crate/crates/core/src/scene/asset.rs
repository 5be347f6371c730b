//! `HeadAsset` and its on-disk format.
//!
//! A file is a short ASCII header followed by a little-endian `f32` blob in
//! splat-major, field-minor order:
//!
//! ```text
//! GSRASSET 1
//! name sphere
//! generator generate_sphere_asset seed=7
//! ground_truth 1
//! sh_degree 2
//! count 2000
//! fields position:3 rotation:4 scale:3 opacity:1 albedo:3 normal:3 roughness:1 transport:27
//! end
//! <count × Σ widths × 4 bytes>
//! ```
//!
//! `rotation` is stored `w x y z`; `transport` is the three channel rows
//! back to back. Field order in the blob follows the `fields` line.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use glam::{Quat, Vec3};
use thiserror::Error;

use super::splat::{Splat, Transport, Violation, UNIT_TOLERANCE};
use crate::sh::{coeff_count, MAX_DEGREE};

pub const MAGIC: &str = "GSRASSET";
pub const VERSION: u32 = 1;

/// Unit vectors within this distance of length 1 are renormalized on load;
/// beyond it they are rejected.
pub const RENORMALIZE_TOLERANCE: f32 = 1e-3;

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("not an asset file (bad magic)")]
    BadMagic,
    #[error("unsupported asset version {0} (this build reads {VERSION})")]
    VersionMismatch(u32),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("field {field} has width {found}, expected {expected}")]
    ShapeMismatch {
        field: String,
        expected: usize,
        found: usize,
    },
    #[error("truncated blob: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("splat {index}: invalid {field}: {detail}")]
    InvariantViolation {
        index: usize,
        field: &'static str,
        detail: String,
    },
    #[error("asset has no splats")]
    Empty,
}

impl AssetError {
    /// Stable numeric code per error class.
    pub fn code(&self) -> u8 {
        match self {
            AssetError::Io { .. } => 1,
            AssetError::BadMagic => 2,
            AssetError::VersionMismatch(_) => 3,
            AssetError::MalformedHeader(_) => 4,
            AssetError::ShapeMismatch { .. } => 5,
            AssetError::Truncated { .. } => 6,
            AssetError::InvariantViolation { .. } => 7,
            AssetError::Empty => 8,
        }
    }

    fn invariant(index: usize, v: Violation) -> Self {
        AssetError::InvariantViolation {
            index,
            field: v.field,
            detail: v.detail,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssetMeta {
    pub name: String,
    pub generator: String,
    pub ground_truth: bool,
}

/// An ordered, validated, non-empty collection of splats.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadAsset {
    splats: Vec<Splat>,
    sh_degree: u32,
    pub meta: AssetMeta,
}

impl HeadAsset {
    pub fn new(splats: Vec<Splat>, sh_degree: u32, meta: AssetMeta) -> Result<Self, AssetError> {
        if splats.is_empty() {
            return Err(AssetError::Empty);
        }
        if sh_degree > MAX_DEGREE {
            return Err(AssetError::MalformedHeader(format!("sh_degree {sh_degree}")));
        }
        for (i, s) in splats.iter().enumerate() {
            if s.transport.degree() != sh_degree {
                return Err(AssetError::ShapeMismatch {
                    field: format!("transport (splat {i})"),
                    expected: 3 * coeff_count(sh_degree),
                    found: 3 * s.transport.width(),
                });
            }
            s.validate().map_err(|v| AssetError::invariant(i, v))?;
        }
        Ok(Self {
            splats,
            sh_degree,
            meta,
        })
    }

    pub fn splats(&self) -> &[Splat] {
        &self.splats
    }

    pub fn len(&self) -> usize {
        self.splats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splats.is_empty()
    }

    pub fn sh_degree(&self) -> u32 {
        self.sh_degree
    }

    /// Replace the splats, re-running validation.
    pub fn with_splats(&self, splats: Vec<Splat>) -> Result<Self, AssetError> {
        Self::new(splats, self.sh_degree, self.meta.clone())
    }

    pub fn centroid(&self) -> glam::DVec3 {
        self.splats.iter().map(Splat::position_f64).sum::<glam::DVec3>() / self.len() as f64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let layout = field_layout(self.sh_degree);
        let mut header = format!("{MAGIC} {VERSION}\n");
        let clean = |s: &str| s.replace(['\n', '\r'], " ");
        let _ = writeln!(header, "name {}", clean(&self.meta.name));
        let _ = writeln!(header, "generator {}", clean(&self.meta.generator));
        let _ = writeln!(header, "ground_truth {}", self.meta.ground_truth as u8);
        let _ = writeln!(header, "sh_degree {}", self.sh_degree);
        let _ = writeln!(header, "count {}", self.splats.len());
        let fields: Vec<String> = layout.iter().map(|(n, w)| format!("{n}:{w}")).collect();
        let _ = writeln!(header, "fields {}", fields.join(" "));
        header.push_str("end\n");

        let stride: usize = layout.iter().map(|(_, w)| w).sum();
        let mut out = header.into_bytes();
        out.reserve(self.splats.len() * stride * 4);
        let mut vals = Vec::with_capacity(stride);
        for s in &self.splats {
            vals.clear();
            for (name, _) in &layout {
                push_field(&mut vals, s, name);
            }
            for v in &vals {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AssetError> {
        let mut lines = HeaderLines { bytes, pos: 0 };
        let first = lines.next_line()?;
        let mut parts = first.split_whitespace();
        if parts.next() != Some(MAGIC) {
            return Err(AssetError::BadMagic);
        }
        let version: u32 = parse(parts.next(), "version")?;
        if version != VERSION {
            return Err(AssetError::VersionMismatch(version));
        }

        let mut meta = AssetMeta::default();
        let mut sh_degree = None;
        let mut count = None;
        let mut fields: Option<Vec<(String, usize)>> = None;
        loop {
            let line = lines.next_line()?;
            if line == "end" {
                break;
            }
            let (key, value) = line.split_once(' ').unwrap_or((line.as_str(), ""));
            match key {
                "name" => meta.name = value.to_string(),
                "generator" => meta.generator = value.to_string(),
                "ground_truth" => meta.ground_truth = parse::<u8>(Some(value), "ground_truth")? != 0,
                "sh_degree" => sh_degree = Some(parse::<u32>(Some(value), "sh_degree")?),
                "count" => count = Some(parse::<usize>(Some(value), "count")?),
                "fields" => {
                    let mut list = Vec::new();
                    for f in value.split_whitespace() {
                        let (n, w) = f
                            .split_once(':')
                            .ok_or_else(|| AssetError::MalformedHeader(format!("field {f:?}")))?;
                        list.push((n.to_string(), parse::<usize>(Some(w), "field width")?));
                    }
                    fields = Some(list);
                }
                other => return Err(AssetError::MalformedHeader(format!("unknown key {other:?}"))),
            }
        }
        let missing = |k: &str| AssetError::MalformedHeader(format!("missing {k}"));
        let sh_degree = sh_degree.ok_or_else(|| missing("sh_degree"))?;
        let count = count.ok_or_else(|| missing("count"))?;
        let fields = fields.ok_or_else(|| missing("fields"))?;
        if sh_degree > MAX_DEGREE {
            return Err(AssetError::MalformedHeader(format!("sh_degree {sh_degree} > {MAX_DEGREE}")));
        }
        let expected = field_layout(sh_degree);
        for (name, width) in &expected {
            match fields.iter().find(|(n, _)| n == name) {
                None => return Err(missing(name)),
                Some((_, w)) if w != width => {
                    return Err(AssetError::ShapeMismatch {
                        field: name.to_string(),
                        expected: *width,
                        found: *w,
                    })
                }
                Some(_) => {}
            }
        }
        if fields.len() != expected.len() {
            return Err(AssetError::MalformedHeader("unexpected extra fields".into()));
        }

        let stride: usize = fields.iter().map(|(_, w)| w).sum();
        let blob = &bytes[lines.pos..];
        let need = count * stride * 4;
        if blob.len() < need {
            return Err(AssetError::Truncated {
                expected: need,
                found: blob.len(),
            });
        }
        let mut splats = Vec::with_capacity(count);
        let floats: Vec<f32> = blob[..need]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        for (i, rec) in floats.chunks_exact(stride).enumerate() {
            let mut s = Splat {
                position: Vec3::ZERO,
                rotation: Quat::IDENTITY,
                scale: Vec3::ONE,
                opacity: 0.0,
                albedo: Vec3::ZERO,
                normal: Vec3::Z,
                roughness: 1.0,
                transport: Transport::zeros(sh_degree),
            };
            let mut off = 0;
            for (name, width) in &fields {
                read_field(&mut s, name, &rec[off..off + width]);
                off += width;
            }
            s.rotation = renormalize_quat(s.rotation).map_err(|v| AssetError::invariant(i, v))?;
            s.normal = renormalize_vec(s.normal).map_err(|v| AssetError::invariant(i, v))?;
            splats.push(s);
        }
        Self::new(splats, sh_degree, meta)
    }

    pub fn save(&self, path: &Path) -> Result<(), AssetError> {
        fs::write(path, self.to_bytes()).map_err(|source| AssetError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, AssetError> {
        let bytes = fs::read(path).map_err(|source| AssetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}

fn field_layout(sh_degree: u32) -> Vec<(&'static str, usize)> {
    vec![
        ("position", 3),
        ("rotation", 4),
        ("scale", 3),
        ("opacity", 1),
        ("albedo", 3),
        ("normal", 3),
        ("roughness", 1),
        ("transport", 3 * coeff_count(sh_degree)),
    ]
}

fn push_field(out: &mut Vec<f32>, s: &Splat, name: &str) {
    match name {
        "position" => out.extend_from_slice(&s.position.to_array()),
        "rotation" => out.extend_from_slice(&[s.rotation.w, s.rotation.x, s.rotation.y, s.rotation.z]),
        "scale" => out.extend_from_slice(&s.scale.to_array()),
        "opacity" => out.push(s.opacity),
        "albedo" => out.extend_from_slice(&s.albedo.to_array()),
        "normal" => out.extend_from_slice(&s.normal.to_array()),
        "roughness" => out.push(s.roughness),
        "transport" => (0..3).for_each(|c| out.extend_from_slice(s.transport.row(c))),
        _ => unreachable!("layout only lists known fields"),
    }
}

fn read_field(s: &mut Splat, name: &str, v: &[f32]) {
    match name {
        "position" => s.position = Vec3::from_slice(v),
        "rotation" => s.rotation = Quat::from_xyzw(v[1], v[2], v[3], v[0]),
        "scale" => s.scale = Vec3::from_slice(v),
        "opacity" => s.opacity = v[0],
        "albedo" => s.albedo = Vec3::from_slice(v),
        "normal" => s.normal = Vec3::from_slice(v),
        "roughness" => s.roughness = v[0],
        "transport" => {
            let w = s.transport.width();
            for c in 0..3 {
                s.transport.row_mut(c).copy_from_slice(&v[c * w..(c + 1) * w]);
            }
        }
        _ => {}
    }
}

fn unit_check(len: f32, field: &'static str) -> Result<bool, Violation> {
    let off = (len - 1.0).abs();
    if !len.is_finite() || off > RENORMALIZE_TOLERANCE {
        return Err(Violation {
            field,
            detail: format!("length {len} is not within {RENORMALIZE_TOLERANCE} of 1"),
        });
    }
    Ok(off > UNIT_TOLERANCE)
}

fn renormalize_quat(q: Quat) -> Result<Quat, Violation> {
    Ok(if unit_check(q.length(), "rotation")? { q.normalize() } else { q })
}

fn renormalize_vec(v: Vec3) -> Result<Vec3, Violation> {
    Ok(if unit_check(v.length(), "normal")? { v.normalize() } else { v })
}

fn parse<T: std::str::FromStr>(s: Option<&str>, what: &str) -> Result<T, AssetError> {
    s.and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| AssetError::MalformedHeader(format!("bad {what}")))
}

struct HeaderLines<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderLines<'_> {
    fn next_line(&mut self) -> Result<String, AssetError> {
        let rest = &self.bytes[self.pos..];
        let end = rest
            .iter()
            .take(4096)
            .position(|&b| b == b'\n')
            .ok_or(if self.pos == 0 {
                AssetError::BadMagic
            } else {
                AssetError::MalformedHeader("unterminated header".into())
            })?;
        let line = std::str::from_utf8(&rest[..end])
            .map_err(|_| {
                if self.pos == 0 {
                    AssetError::BadMagic
                } else {
                    AssetError::MalformedHeader("non-utf8 header".into())
                }
            })?
            .to_string();
        self.pos += end + 1;
        Ok(line)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::generate::generate_sphere_asset;

    fn sphere() -> HeadAsset {
        generate_sphere_asset(64, 1.0, [0.7, 0.5, 0.4], 0.4, 3).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let a = sphere();
        let bytes = a.to_bytes();
        let b = HeadAsset::from_bytes(&bytes).unwrap();
        assert_eq!(a, b);
        assert_eq!(bytes, b.to_bytes());
    }

    #[test]
    fn header_is_readable() {
        let bytes = sphere().to_bytes();
        let end = bytes.windows(4).position(|w| w == b"end\n").unwrap();
        let text = String::from_utf8_lossy(&bytes[..end]);
        assert!(text.starts_with("GSRASSET 1\nname sphere\n"), "{text}");
        assert!(text.contains("transport:27"));
    }

    fn patch_blob(bytes: &mut [u8], float_index: usize, value: f32) {
        let start = bytes.windows(4).position(|w| w == b"end\n").unwrap() + 4;
        let off = start + float_index * 4;
        bytes[off..off + 4].copy_from_slice(&value.to_le_bytes());
    }

    #[test]
    fn zero_quaternion_is_an_invariant_violation() {
        let mut bytes = sphere().to_bytes();
        for i in 3..7 {
            patch_blob(&mut bytes, i, 0.0);
        }
        let err = HeadAsset::from_bytes(&bytes).unwrap_err();
        assert!(matches!(err, AssetError::InvariantViolation { index: 0, field: "rotation", .. }), "{err}");
    }

    #[test]
    fn slightly_off_unit_vectors_are_renormalized() {
        let mut bytes = sphere().to_bytes();
        // normal starts at float 14 of the first record
        let n = sphere().splats()[0].normal * 1.0005;
        for (k, c) in n.to_array().into_iter().enumerate() {
            patch_blob(&mut bytes, 14 + k, c);
        }
        let a = HeadAsset::from_bytes(&bytes).unwrap();
        assert!((a.splats()[0].normal.length() - 1.0).abs() < 1e-6);

        let far = sphere().splats()[0].normal * 1.01;
        for (k, c) in far.to_array().into_iter().enumerate() {
            patch_blob(&mut bytes, 14 + k, c);
        }
        assert!(matches!(
            HeadAsset::from_bytes(&bytes),
            Err(AssetError::InvariantViolation { field: "normal", .. })
        ));
    }

    #[test]
    fn transport_width_mismatch() {
        let bytes = sphere().to_bytes();
        let text = String::from_utf8_lossy(&bytes).replace("transport:27", "transport:12");
        let err = HeadAsset::from_bytes(text.as_bytes()).unwrap_err();
        assert!(matches!(err, AssetError::ShapeMismatch { expected: 27, found: 12, .. }), "{err}");
    }

    #[test]
    fn distinct_error_codes() {
        let good = sphere().to_bytes();
        let truncated = &good[..good.len() - 10];
        let bad_version = String::from_utf8_lossy(&good).replacen("GSRASSET 1", "GSRASSET 9", 1);
        let errs = [
            HeadAsset::from_bytes(b"PLY\n").unwrap_err(),
            HeadAsset::from_bytes(bad_version.as_bytes()).unwrap_err(),
            HeadAsset::from_bytes(truncated).unwrap_err(),
        ];
        assert!(matches!(errs[0], AssetError::BadMagic));
        assert!(matches!(errs[1], AssetError::VersionMismatch(9)));
        assert!(matches!(errs[2], AssetError::Truncated { .. }));
        let mut codes: Vec<u8> = errs.iter().map(AssetError::code).collect();
        codes.dedup();
        assert_eq!(codes.len(), 3);
    }

    #[test]
    fn empty_asset_rejected() {
        assert!(matches!(HeadAsset::new(vec![], 2, AssetMeta::default()), Err(AssetError::Empty)));
    }
}
