//! Real spherical harmonics up to degree 3.
//!
//! Coefficients are stored band-major: `(l, m)` for `l = 0..=degree` and
//! `m = -l..=l`, so index `l * l + l + m`. The basis is the usual graphics
//! convention without the Condon-Shortley phase: every constant below is
//! positive and the sign comes from the Cartesian polynomial alone.
//!
//! | index | (l, m)  | Y_lm(x, y, z)                    | constant                  |
//! |-------|---------|----------------------------------|---------------------------|
//! | 0     | (0, 0)  | c0                               | 1/(2√π) = 0.2820948       |
//! | 1     | (1, -1) | c1 · y                           | √(3/4π) = 0.4886025       |
//! | 2     | (1, 0)  | c1 · z                           |                           |
//! | 3     | (1, 1)  | c1 · x                           |                           |
//! | 4     | (2, -2) | c2 · xy                          | √(15/4π) = 1.0925484      |
//! | 5     | (2, -1) | c2 · yz                          |                           |
//! | 6     | (2, 0)  | c20 · (3z² - 1)                  | √(5/16π) = 0.3153916      |
//! | 7     | (2, 1)  | c2 · xz                          |                           |
//! | 8     | (2, 2)  | c22 · (x² - y²)                  | √(15/16π) = 0.5462742     |
//! | 9     | (3, -3) | c33 · y(3x² - y²)                | √(35/32π) = 0.5900436     |
//! | 10    | (3, -2) | c32 · xyz                        | √(105/4π) = 2.8906114     |
//! | 11    | (3, -1) | c31 · y(5z² - 1)                 | √(21/32π) = 0.4570458     |
//! | 12    | (3, 0)  | c30 · z(5z² - 3)                 | √(7/16π) = 0.3731763      |
//! | 13    | (3, 1)  | c31 · x(5z² - 1)                 |                           |
//! | 14    | (3, 2)  | c3m · z(x² - y²)                 | √(105/16π) = 1.4453057    |
//! | 15    | (3, 3)  | c33 · x(x² - 3y²)                |                           |

use glam::DVec3;
use thiserror::Error;

use crate::lighting::EnvMap;

/// Highest supported degree.
pub const MAX_DEGREE: u32 = 3;
/// Coefficient count at [`MAX_DEGREE`].
pub const MAX_COEFFS: usize = 16;
/// Degree used by transport coefficients unless configured otherwise.
pub const DEFAULT_DEGREE: u32 = 2;

const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShError {
    #[error("spherical harmonics degree {0} is not supported (max {MAX_DEGREE})")]
    UnsupportedDegree(u32),
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(u32, u32),
    #[error("direction has zero or non-finite length")]
    DegenerateDirection,
    #[error("radiance must be finite and non-negative, got {0:?}")]
    NegativeRadiance([f64; 3]),
    #[error("environment map is empty")]
    EmptyEnvMap,
    #[error("coefficient count {got} does not match degree {degree}")]
    LengthMismatch { degree: u32, got: usize },
}

pub type Result<T> = std::result::Result<T, ShError>;

/// Number of coefficients of a degree-`degree` expansion, `(degree + 1)²`.
pub const fn coeff_count(degree: u32) -> usize {
    ((degree + 1) * (degree + 1)) as usize
}

fn check_degree(degree: u32) -> Result<()> {
    if degree > MAX_DEGREE {
        Err(ShError::UnsupportedDegree(degree))
    } else {
        Ok(())
    }
}

/// A real SH coefficient vector of a fixed degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShVector {
    degree: u32,
    coeffs: [f64; MAX_COEFFS],
}

impl ShVector {
    pub fn zeros(degree: u32) -> Result<Self> {
        check_degree(degree)?;
        Ok(Self {
            degree,
            coeffs: [0.0; MAX_COEFFS],
        })
    }

    pub fn from_slice(degree: u32, coeffs: &[f64]) -> Result<Self> {
        let mut v = Self::zeros(degree)?;
        if coeffs.len() != coeff_count(degree) {
            return Err(ShError::LengthMismatch {
                degree,
                got: coeffs.len(),
            });
        }
        v.coeffs[..coeffs.len()].copy_from_slice(coeffs);
        Ok(v)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        coeff_count(self.degree)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs[..self.len()]
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        let n = self.len();
        &mut self.coeffs[..n]
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|c| c.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = *self;
        out.as_mut_slice().iter_mut().for_each(|c| *c *= s);
        out
    }

    /// `self += s * other`; degrees must match.
    pub fn add_scaled(&mut self, other: &ShVector, s: f64) -> Result<()> {
        if self.degree != other.degree {
            return Err(ShError::DegreeMismatch(self.degree, other.degree));
        }
        for (a, b) in self.as_mut_slice().iter_mut().zip(other.as_slice()) {
            *a += s * b;
        }
        Ok(())
    }
}

/// One SH vector per colour channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShLightingRgb {
    pub channels: [ShVector; 3],
}

impl ShLightingRgb {
    pub fn zeros(degree: u32) -> Result<Self> {
        let z = ShVector::zeros(degree)?;
        Ok(Self { channels: [z; 3] })
    }

    pub fn new(r: ShVector, g: ShVector, b: ShVector) -> Result<Self> {
        if r.degree != g.degree || r.degree != b.degree {
            return Err(ShError::DegreeMismatch(r.degree, g.degree.max(b.degree)));
        }
        Ok(Self {
            channels: [r, g, b],
        })
    }

    pub fn degree(&self) -> u32 {
        self.channels[0].degree
    }

    pub fn add_assign(&mut self, other: &ShLightingRgb) -> Result<()> {
        for (a, b) in self.channels.iter_mut().zip(&other.channels) {
            a.add_scaled(b, 1.0)?;
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            channels: self.channels.map(|c| c.scaled(s)),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.channels.iter().all(ShVector::is_finite)
    }
}

const C0: f64 = 0.282_094_791_773_878_14; // 1/(2√π)
const C1: f64 = 0.488_602_511_902_919_9; // √(3/4π)
const C2: f64 = 1.092_548_430_592_079_2; // √(15/4π)
const C20: f64 = 0.315_391_565_252_520_05; // √(5/16π)
const C22: f64 = 0.546_274_215_296_039_6; // √(15/16π)
const C33: f64 = 0.590_043_589_926_643_5; // √(35/32π)
const C32: f64 = 2.890_611_442_640_554; // √(105/4π)
const C31: f64 = 0.457_045_799_464_465_8; // √(21/32π)
const C30: f64 = 0.373_176_332_590_115_4; // √(7/16π)
const C3M: f64 = 1.445_305_721_320_277; // √(105/16π)

/// Evaluate the basis at a unit direction into `out[..coeff_count(degree)]`.
///
/// No normalization or validation happens here; this is the inner-loop
/// variant behind [`sh_basis`].
pub fn eval_basis_into(dir: DVec3, degree: u32, out: &mut [f64]) {
    let DVec3 { x, y, z } = dir;
    out[0] = C0;
    if degree == 0 {
        return;
    }
    out[1] = C1 * y;
    out[2] = C1 * z;
    out[3] = C1 * x;
    if degree == 1 {
        return;
    }
    out[4] = C2 * x * y;
    out[5] = C2 * y * z;
    out[6] = C20 * (3.0 * z * z - 1.0);
    out[7] = C2 * x * z;
    out[8] = C22 * (x * x - y * y);
    if degree == 2 {
        return;
    }
    out[9] = C33 * y * (3.0 * x * x - y * y);
    out[10] = C32 * x * y * z;
    out[11] = C31 * y * (5.0 * z * z - 1.0);
    out[12] = C30 * z * (5.0 * z * z - 3.0);
    out[13] = C31 * x * (5.0 * z * z - 1.0);
    out[14] = C3M * z * (x * x - y * y);
    out[15] = C33 * x * (x * x - 3.0 * y * y);
}

/// Basis evaluation plus a flag telling whether `dir` had to be renormalized.
pub fn sh_basis_flagged(dir: DVec3, degree: u32) -> Result<(ShVector, bool)> {
    check_degree(degree)?;
    let len = dir.length();
    if !len.is_finite() || len == 0.0 {
        return Err(ShError::DegenerateDirection);
    }
    let renormalized = (len - 1.0).abs() > UNIT_TOLERANCE;
    // Always divide: near-unit inputs then give the same result as the
    // exactly normalized direction.
    let unit = dir / len;
    let mut v = ShVector::zeros(degree)?;
    eval_basis_into(unit, degree, &mut v.coeffs);
    Ok((v, renormalized))
}

/// `Y_lm(dir)` for every band up to `degree`.
pub fn sh_basis(dir: DVec3, degree: u32) -> Result<ShVector> {
    let (v, renormalized) = sh_basis_flagged(dir, degree)?;
    if renormalized {
        log::warn!("sh_basis: direction {dir:?} was not unit length; normalized");
    }
    Ok(v)
}

fn check_radiance(radiance: [f64; 3]) -> Result<()> {
    if radiance.iter().all(|c| c.is_finite() && *c >= 0.0) {
        Ok(())
    } else {
        Err(ShError::NegativeRadiance(radiance))
    }
}

/// Project a directional (delta) light: channel `c` is `radiance[c] · Y(dir)`.
///
/// No solid-angle factor is applied; any global scale belongs to the light
/// intensity.
pub fn project_delta_light(dir: DVec3, radiance: [f64; 3], degree: u32) -> Result<ShLightingRgb> {
    check_radiance(radiance)?;
    let basis = sh_basis(dir, degree)?;
    Ok(ShLightingRgb {
        channels: radiance.map(|r| basis.scaled(r)),
    })
}

/// Riemann-sum projection of an equirectangular map.
///
/// Each texel contributes `L · Y(ω) · ΔΩ` with `ΔΩ = (2π/W)(π/H) sin θ`
/// evaluated at the texel centre.
pub fn project_envmap(env: &EnvMap, degree: u32) -> Result<ShLightingRgb> {
    check_degree(degree)?;
    if env.width() == 0 || env.height() == 0 {
        return Err(ShError::EmptyEnvMap);
    }
    let n = coeff_count(degree);
    let mut acc = [[0.0f64; MAX_COEFFS]; 3];
    let mut basis = [0.0f64; MAX_COEFFS];
    for row in 0..env.height() {
        let d_omega = env.texel_solid_angle(row);
        let mut row_acc = [[0.0f64; MAX_COEFFS]; 3];
        for col in 0..env.width() {
            let texel = env.get(col, row);
            if texel == [0.0; 3] {
                continue;
            }
            eval_basis_into(env.texel_direction(col, row), degree, &mut basis);
            for (c, radiance) in texel.iter().enumerate() {
                for (a, y) in row_acc[c][..n].iter_mut().zip(&basis[..n]) {
                    *a += radiance * y;
                }
            }
        }
        for c in 0..3 {
            for i in 0..n {
                acc[c][i] += row_acc[c][i] * d_omega;
            }
        }
    }
    let channels = acc.map(|a| ShVector { degree, coeffs: a });
    Ok(ShLightingRgb { channels })
}

/// Plain dot product of two coefficient vectors of equal degree.
pub fn sh_dot(a: &ShVector, b: &ShVector) -> Result<f64> {
    if a.degree != b.degree {
        return Err(ShError::DegreeMismatch(a.degree, b.degree));
    }
    Ok(a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum())
}

/// Zonal factors of the clamped-cosine kernel divided by π, `Â_l / π` with
/// `Â = (π, 2π/3, π/4, 0)`. Multiplying `Y_lm(n)` by these gives the
/// unshadowed Lambert transport of a surface with normal `n`.
pub const LAMBERT_ZONAL: [f64; 4] = [1.0, 2.0 / 3.0, 0.25, 0.0];

/// Unshadowed Lambert transport for normal `n` (a single SH row).
pub fn lambert_transport(n: DVec3, degree: u32) -> Result<ShVector> {
    let mut v = sh_basis(n, degree)?;
    for l in 0..=degree {
        let lo = (l * l) as usize;
        let hi = coeff_count(l);
        v.coeffs[lo..hi].iter_mut().for_each(|c| *c *= LAMBERT_ZONAL[l as usize]);
    }
    Ok(v)
}
