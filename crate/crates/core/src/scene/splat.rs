use glam::{DVec3, Quat, Vec3};

use crate::sh::{coeff_count, ShVector, MAX_COEFFS, MAX_DEGREE};

/// Tolerance of the unit-length invariants on `rotation` and `normal`.
pub const UNIT_TOLERANCE: f32 = 1e-5;

/// Per-channel SH transport rows (`3 × (degree+1)²`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transport {
    degree: u32,
    rows: [[f32; MAX_COEFFS]; 3],
}

impl Transport {
    pub fn zeros(degree: u32) -> Self {
        assert!(degree <= MAX_DEGREE, "transport degree {degree} > {MAX_DEGREE}");
        Self {
            degree,
            rows: [[0.0; MAX_COEFFS]; 3],
        }
    }

    /// The same row for all three channels.
    pub fn gray(row: &ShVector) -> Self {
        let mut t = Self::zeros(row.degree());
        for ch in 0..3 {
            for (dst, src) in t.rows[ch].iter_mut().zip(row.as_slice()) {
                *dst = *src as f32;
            }
        }
        t
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn width(&self) -> usize {
        coeff_count(self.degree)
    }

    pub fn row(&self, channel: usize) -> &[f32] {
        &self.rows[channel][..self.width()]
    }

    pub fn row_mut(&mut self, channel: usize) -> &mut [f32] {
        let n = self.width();
        &mut self.rows[channel][..n]
    }

    pub fn row_sh(&self, channel: usize) -> ShVector {
        let v: Vec<f64> = self.row(channel).iter().map(|&c| c as f64).collect();
        ShVector::from_slice(self.degree, &v).expect("degree already validated")
    }

    pub fn scaled(&self, s: f32) -> Self {
        let mut t = *self;
        for ch in 0..3 {
            t.row_mut(ch).iter_mut().for_each(|c| *c *= s);
        }
        t
    }
}

/// One 3D Gaussian with its geometry and relighting attributes.
///
/// Storage is `f32`; all shading and compositing math widens to `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splat {
    pub position: Vec3,
    /// Unit quaternion, local-to-world.
    pub rotation: Quat,
    /// Standard deviations along the local axes.
    pub scale: Vec3,
    pub opacity: f32,
    pub albedo: Vec3,
    pub normal: Vec3,
    pub roughness: f32,
    pub transport: Transport,
}

/// Which invariant a splat violates.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub detail: String,
}

impl Splat {
    pub fn position_f64(&self) -> DVec3 {
        self.position.as_dvec3()
    }

    pub fn normal_f64(&self) -> DVec3 {
        self.normal.as_dvec3()
    }

    pub fn albedo_f64(&self) -> DVec3 {
        self.albedo.as_dvec3()
    }

    /// Check every attribute invariant; the first violation is reported.
    pub fn validate(&self) -> Result<(), Violation> {
        let fail = |field, detail: String| Err(Violation { field, detail });
        let finite3 = |v: Vec3| v.is_finite();
        if !finite3(self.position) {
            return fail("position", format!("{:?} is not finite", self.position));
        }
        let q = self.rotation;
        if !q.is_finite() || (q.length() - 1.0).abs() > UNIT_TOLERANCE {
            return fail("rotation", format!("|q| = {} is not unit", q.length()));
        }
        if !finite3(self.scale) || self.scale.min_element() <= 0.0 {
            return fail("scale", format!("{:?} must be positive", self.scale));
        }
        if !(0.0..=1.0).contains(&self.opacity) {
            return fail("opacity", format!("{} outside [0, 1]", self.opacity));
        }
        if !finite3(self.albedo) || self.albedo.min_element() < 0.0 || self.albedo.max_element() > 1.0 {
            return fail("albedo", format!("{:?} outside [0, 1]", self.albedo));
        }
        if !finite3(self.normal) || (self.normal.length() - 1.0).abs() > UNIT_TOLERANCE {
            return fail("normal", format!("|n| = {} is not unit", self.normal.length()));
        }
        if !(self.roughness > 0.0 && self.roughness <= 1.0) {
            return fail("roughness", format!("{} outside (0, 1]", self.roughness));
        }
        if (0..3).any(|c| self.transport.row(c).iter().any(|v| !v.is_finite())) {
            return fail("transport", "non-finite coefficient".to_string());
        }
        Ok(())
    }
}
