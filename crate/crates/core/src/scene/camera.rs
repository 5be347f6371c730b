use std::path::Path;

use glam::{DMat3, DVec3};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    #[error("focal lengths must be positive (fx={0}, fy={1})")]
    BadFocal(f64, f64),
    #[error("rotation is not orthonormal (error {0:e})")]
    NotOrthonormal(f64),
    #[error("resolution must be non-zero")]
    EmptyResolution,
    #[error("orbit eye coincides with target")]
    DegenerateOrbit,
    #[error("camera file: {0}")]
    Parse(String),
}

/// Pinhole camera in the OpenCV convention: camera `x` right, `y` down,
/// `z` forward. Pixel `(i, j)` is sampled at `(i + 0.5, j + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// World-to-camera rotation.
    pub rotation: DMat3,
    /// World-to-camera translation.
    pub translation: DVec3,
    pub width: usize,
    pub height: usize,
}

/// Orbit parameters around a target; angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orbit {
    pub azimuth: f64,
    pub elevation: f64,
    pub distance: f64,
    pub fov_y: f64,
    pub target: DVec3,
}

impl Default for Orbit {
    fn default() -> Self {
        Self {
            azimuth: 0.0,
            elevation: 0.0,
            distance: 4.0,
            fov_y: 40.0,
            target: DVec3::ZERO,
        }
    }
}

impl Camera {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        rotation: DMat3,
        translation: DVec3,
        width: usize,
        height: usize,
    ) -> Result<Self, CameraError> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(CameraError::BadFocal(fx, fy));
        }
        if width == 0 || height == 0 {
            return Err(CameraError::EmptyResolution);
        }
        let err = (rotation * rotation.transpose() - DMat3::IDENTITY)
            .to_cols_array()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if !(err <= 1e-5) || rotation.determinant() < 0.0 {
            return Err(CameraError::NotOrthonormal(err));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            rotation,
            translation,
            width,
            height,
        })
    }

    /// Camera looking at `orbit.target` from azimuth/elevation around the
    /// vertical `+y` axis. Azimuth 0, elevation 0 sits on `+z`.
    pub fn orbit(orbit: &Orbit, width: usize, height: usize) -> Result<Self, CameraError> {
        let (az, el) = (orbit.azimuth.to_radians(), orbit.elevation.clamp(-89.9, 89.9).to_radians());
        let offset = DVec3::new(el.cos() * az.sin(), el.sin(), el.cos() * az.cos()) * orbit.distance;
        if !(offset.length() > 0.0) {
            return Err(CameraError::DegenerateOrbit);
        }
        let eye = orbit.target + offset;
        Self::look_at(eye, orbit.target, orbit.fov_y, width, height)
    }

    /// World-up is `+y`.
    pub fn look_at(eye: DVec3, target: DVec3, fov_y: f64, width: usize, height: usize) -> Result<Self, CameraError> {
        let forward = (target - eye).normalize();
        let right = forward.cross(DVec3::Y);
        if !(right.length() > 1e-9) {
            return Err(CameraError::DegenerateOrbit);
        }
        let right = right.normalize();
        let down = forward.cross(right);
        let rotation = DMat3::from_cols(right, down, forward).transpose();
        let translation = -(rotation * eye);
        let f = 0.5 * height as f64 / (0.5 * fov_y.to_radians()).tan();
        Self::new(f, f, width as f64 / 2.0, height as f64 / 2.0, rotation, translation, width, height)
    }

    /// Camera centre in world space.
    pub fn center(&self) -> DVec3 {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn world_to_camera(&self, p: DVec3) -> DVec3 {
        self.rotation * p + self.translation
    }

    /// Text form: `fx fy cx cy width height` then three rows of `R | t`.
    pub fn to_text(&self) -> String {
        let r = self.rotation.transpose(); // rows of R
        let mut s = format!(
            "{} {} {} {} {} {}\n",
            self.fx, self.fy, self.cx, self.cy, self.width, self.height
        );
        for (i, row) in [r.x_axis, r.y_axis, r.z_axis].iter().enumerate() {
            s.push_str(&format!("{} {} {} {}\n", row.x, row.y, row.z, self.translation[i]));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, CameraError> {
        let nums: Vec<f64> = text
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| CameraError::Parse(format!("bad number {t:?}"))))
            .collect::<Result<_, _>>()?;
        if nums.len() != 18 {
            return Err(CameraError::Parse(format!("expected 18 numbers, found {}", nums.len())));
        }
        let rows = [
            DVec3::new(nums[6], nums[7], nums[8]),
            DVec3::new(nums[10], nums[11], nums[12]),
            DVec3::new(nums[14], nums[15], nums[16]),
        ];
        let rotation = DMat3::from_cols(rows[0], rows[1], rows[2]).transpose();
        let translation = DVec3::new(nums[9], nums[13], nums[17]);
        let dim = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(CameraError::Parse(format!("bad resolution {v}")))
            }
        };
        Self::new(nums[0], nums[1], nums[2], nums[3], rotation, translation, dim(nums[4])?, dim(nums[5])?)
    }

    pub fn load(path: &Path) -> Result<Self, CameraError> {
        let text = std::fs::read_to_string(path).map_err(|e| CameraError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn frontal_orbit_looks_down_minus_z() {
        let cam = Camera::orbit(&Orbit::default(), 64, 48).unwrap();
        assert_abs_diff_eq!(cam.center().z, 4.0, epsilon = 1e-12);
        let origin = cam.world_to_camera(DVec3::ZERO);
        assert_abs_diff_eq!(origin.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(origin.z, 4.0, epsilon = 1e-12);
        // +x world is to the right, +y world is up (negative camera y).
        assert!(cam.world_to_camera(DVec3::X).x > 0.0);
        assert!(cam.world_to_camera(DVec3::Y).y < 0.0);
    }

    #[test]
    fn text_round_trip() {
        let cam = Camera::orbit(
            &Orbit {
                azimuth: 30.0,
                elevation: 15.0,
                ..Orbit::default()
            },
            32,
            32,
        )
        .unwrap();
        let back = Camera::from_text(&cam.to_text()).unwrap();
        assert_eq!(cam, back);
    }

    #[test]
    fn validation() {
        let r = DMat3::IDENTITY;
        assert!(matches!(Camera::new(0.0, 1.0, 0.0, 0.0, r, DVec3::ZERO, 1, 1), Err(CameraError::BadFocal(..))));
        let skew = DMat3::from_cols(DVec3::X, DVec3::new(0.1, 1.0, 0.0), DVec3::Z);
        assert!(matches!(Camera::new(1.0, 1.0, 0.0, 0.0, skew, DVec3::ZERO, 1, 1), Err(CameraError::NotOrthonormal(_))));
        assert!(Camera::from_text("1 2 3").is_err());
    }
}
