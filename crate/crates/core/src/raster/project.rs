use glam::{DMat3, DVec2, DVec3};

use crate::scene::{Camera, Splat};

/// Low-pass dilation added to the screen-space covariance diagonal (px²).
pub const DILATION: f64 = 0.3;
/// Squared Mahalanobis radius beyond which a splat does not touch a pixel.
pub const CUTOFF_SQ: f64 = 9.0;
/// Splats closer than this to the camera plane are culled.
pub const NEAR: f64 = 0.01;

/// A splat projected to the image plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projected {
    pub index: u32,
    /// Pixel-space mean.
    pub mean: DVec2,
    /// `Σ'` before dilation as `[xx, xy, yy]`.
    pub cov_raw: [f64; 3],
    /// `Σ'` after dilation.
    pub cov: [f64; 3],
    /// Inverse of `cov`.
    pub conic: [f64; 3],
    pub depth: f64,
    pub opacity: f64,
    /// Half extents of the `m ≤ 9` ellipse's bounding box.
    pub extent: DVec2,
}

impl Projected {
    /// Squared Mahalanobis distance of pixel position `p`.
    #[inline]
    pub fn mahalanobis_sq(&self, p: DVec2) -> f64 {
        let d = p - self.mean;
        self.conic[0] * d.x * d.x + 2.0 * self.conic[1] * d.x * d.y + self.conic[2] * d.y * d.y
    }
}

/// World-space covariance `R diag(s²) Rᵀ`.
pub fn covariance_3d(splat: &Splat) -> DMat3 {
    let r = DMat3::from_quat(splat.rotation.as_dquat());
    let s = splat.scale.as_dvec3();
    r * DMat3::from_diagonal(s * s) * r.transpose()
}

/// Project with the 3DGS perspective Jacobian. Returns `None` when the splat
/// is behind the near plane or its 3σ box misses the frame.
pub fn project_splat(splat: &Splat, index: u32, camera: &Camera) -> Option<Projected> {
    let t: DVec3 = camera.world_to_camera(splat.position_f64());
    if !(t.z > NEAR) {
        return None;
    }
    let (fx, fy) = (camera.fx, camera.fy);
    let mean = DVec2::new(fx * t.x / t.z + camera.cx, fy * t.y / t.z + camera.cy);
    let iz = 1.0 / t.z;
    // rows of J (2x3)
    let j0 = DVec3::new(fx * iz, 0.0, -fx * t.x * iz * iz);
    let j1 = DVec3::new(0.0, fy * iz, -fy * t.y * iz * iz);
    let w = camera.rotation;
    let sigma = w * covariance_3d(splat) * w.transpose();
    let (s0, s1) = (sigma * j0, sigma * j1);
    let cov_raw = [j0.dot(s0), j0.dot(s1), j1.dot(s1)];
    let cov = [cov_raw[0] + DILATION, cov_raw[1], cov_raw[2] + DILATION];
    let det = cov[0] * cov[2] - cov[1] * cov[1];
    if !(det > 0.0) || !det.is_finite() {
        return None;
    }
    let conic = [cov[2] / det, -cov[1] / det, cov[0] / det];
    let extent = DVec2::new((CUTOFF_SQ * cov[0]).sqrt(), (CUTOFF_SQ * cov[2]).sqrt());
    let (w_px, h_px) = (camera.width as f64, camera.height as f64);
    if mean.x + extent.x < 0.0 || mean.x - extent.x > w_px || mean.y + extent.y < 0.0 || mean.y - extent.y > h_px {
        return None;
    }
    Some(Projected {
        index,
        mean,
        cov_raw,
        cov,
        conic,
        depth: t.z,
        opacity: splat.opacity as f64,
        extent,
    })
}
