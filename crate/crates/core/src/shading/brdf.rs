//! Cook-Torrance specular terms with `α = σ²`.

use std::f64::consts::PI;

use glam::DVec3;

/// Roughness floor keeping the GGX lobe finite.
pub const ROUGHNESS_FLOOR: f64 = 0.01;

fn alpha(sigma: f64) -> f64 {
    let s = sigma.max(ROUGHNESS_FLOOR);
    s * s
}

/// Trowbridge-Reitz / GGX normal distribution
/// `D = α² / (π ((n·h)²(α² − 1) + 1)²)`, `α = σ²`.
pub fn ggx_d(n_dot_h: f64, sigma: f64) -> f64 {
    let c = n_dot_h.clamp(0.0, 1.0);
    let a2 = alpha(sigma).powi(2);
    let q = c * c * (a2 - 1.0) + 1.0;
    a2 / (PI * q * q)
}

/// Schlick's approximation `F0 + (1 − F0)(1 − max(o·h, 0))⁵`.
pub fn fresnel_schlick(o_dot_h: f64, f0: f64) -> f64 {
    let k = 1.0 - o_dot_h.max(0.0).min(1.0);
    f0 + (1.0 - f0) * k.powi(5)
}

/// Smith `G1(x) = 2x / (x + √(α² + (1 − α²)x²))`.
pub fn smith_g1(x: f64, sigma: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    if x == 0.0 {
        return 0.0;
    }
    let a2 = alpha(sigma).powi(2);
    2.0 * x / (x + (a2 + (1.0 - a2) * x * x).sqrt())
}

/// Separable Smith masking-shadowing `G1(n·i) · G1(n·o)`.
pub fn smith_g(n_dot_i: f64, n_dot_o: f64, sigma: f64) -> f64 {
    smith_g1(n_dot_i, sigma) * smith_g1(n_dot_o, sigma)
}

/// `f = D F G / (4 (n·ωi)(n·ωo))`; zero when either side faces away or the
/// halfway vector is undefined.
pub fn specular_brdf(wi: DVec3, wo: DVec3, n: DVec3, sigma: f64, f0: f64) -> f64 {
    let (ni, no) = (n.dot(wi), n.dot(wo));
    if ni <= 0.0 || no <= 0.0 {
        return 0.0;
    }
    let sum = wi + wo;
    let len = sum.length();
    if len < 1e-12 {
        return 0.0;
    }
    let h = sum / len;
    ggx_d(n.dot(h), sigma) * fresnel_schlick(wo.dot(h), f0) * smith_g(ni, no, sigma) / (4.0 * ni * no)
}

/// Derivatives of one light's specular factor `g = f · (n·ωi)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpecularGrad {
    pub normal: DVec3,
    pub sigma: f64,
}

/// `g = D F G / (4 n·ωo)` for an unnormalized normal, the form the fitter
/// differentiates. The cosines are taken against `n` as given, so a unit
/// `n` reproduces `specular_brdf(ωi, ωo, n) · (n·ωi)`.
///
/// Returns `(g, sign pattern)` where the pattern records which side of the
/// backfacing clamps `n` sits on.
pub fn specular_factor(wi: DVec3, wo: DVec3, n: DVec3, sigma: f64, f0: f64) -> (f64, u8) {
    eval_factor::<false>(wi, wo, n, sigma, f0).0
}

/// [`specular_factor`] with its gradient.
pub fn specular_factor_grad(wi: DVec3, wo: DVec3, n: DVec3, sigma: f64, f0: f64) -> (f64, SpecularGrad) {
    let ((g, _), grad) = eval_factor::<true>(wi, wo, n, sigma, f0);
    (g, grad)
}

fn eval_factor<const GRAD: bool>(
    wi: DVec3,
    wo: DVec3,
    n: DVec3,
    sigma: f64,
    f0: f64,
) -> ((f64, u8), SpecularGrad) {
    let (a, b) = (n.dot(wi), n.dot(wo));
    let pattern = (a > 0.0) as u8 | (((b > 0.0) as u8) << 1);
    let sum = wi + wo;
    let len = sum.length();
    if a <= 0.0 || b <= 0.0 || len < 1e-12 {
        return ((0.0, pattern), SpecularGrad::default());
    }
    let h = sum / len;
    let c = n.dot(h);
    let floored = sigma < ROUGHNESS_FLOOR;
    let s = sigma.max(ROUGHNESS_FLOOR);
    let al = s * s;
    let a2 = al * al;

    let q = c * c * (a2 - 1.0) + 1.0;
    let d = a2 / (PI * q * q);
    let f = fresnel_schlick(wo.dot(h), f0);
    let (ra, rb) = ((a2 + (1.0 - a2) * a * a).sqrt(), (a2 + (1.0 - a2) * b * b).sqrt());
    let (g1a, g1b) = (2.0 * a / (a + ra), 2.0 * b / (b + rb));
    let g = d * f * g1a * g1b / (4.0 * b);
    if !GRAD {
        return ((g, pattern), SpecularGrad::default());
    }

    // dG1/dx and dG1/dα for G1 = 2x / (x + r)
    let dg1_dx = |x: f64, r: f64| {
        let dr = (1.0 - a2) * x / r;
        (2.0 * (x + r) - 2.0 * x * (1.0 + dr)) / ((x + r) * (x + r))
    };
    let dg1_dal = |x: f64, r: f64| {
        let dr = al * (1.0 - x * x) / r;
        -2.0 * x * dr / ((x + r) * (x + r))
    };
    let dd_dc = -4.0 * a2 * c * (a2 - 1.0) / (PI * q * q * q);
    let dd_dal = 2.0 * al / (PI * q * q * q) * (q - 2.0 * a2 * c * c);

    let dg_da = d * f * dg1_dx(a, ra) * g1b / (4.0 * b);
    let dg_db = d * f * g1a * (dg1_dx(b, rb) / (4.0 * b) - g1b / (4.0 * b * b));
    let dg_dc = dd_dc * f * g1a * g1b / (4.0 * b);
    let dg_dal = f / (4.0 * b) * (dd_dal * g1a * g1b + d * (dg1_dal(a, ra) * g1b + g1a * dg1_dal(b, rb)));

    let grad = SpecularGrad {
        normal: wi * dg_da + wo * dg_db + h * dg_dc,
        sigma: if floored { 0.0 } else { dg_dal * 2.0 * s },
    };
    ((g, pattern), grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn spot_values() {
        assert_abs_diff_eq!(ggx_d(0.3, 1.0), 1.0 / PI, epsilon = 1e-12);
        assert_abs_diff_eq!(ggx_d(1.0, 0.5f64.sqrt()), 1.2732395, epsilon = 1e-7);
        assert_abs_diff_eq!(ggx_d(0.0, 0.1f64.sqrt()), 0.0031831, epsilon = 1e-7);
        assert_abs_diff_eq!(fresnel_schlick(1.0, 0.04), 0.04, epsilon = 1e-15);
        assert_abs_diff_eq!(fresnel_schlick(0.0, 0.04), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fresnel_schlick(0.5, 0.04), 0.07, epsilon = 1e-15);
        assert_abs_diff_eq!(smith_g(1.0, 1.0, 0.37), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(smith_g(0.5, 0.5, 1.0), 4.0 / 9.0, epsilon = 1e-15);
        assert_eq!(smith_g(0.0, 0.7, 0.5), 0.0);
        let n = DVec3::Z;
        assert_abs_diff_eq!(specular_brdf(n, n, n, 1.0, 0.04), 0.04 / (4.0 * PI), epsilon = 1e-12);
    }

    #[test]
    fn smooth_limit_of_smith() {
        // α at the floor is 1e-4; G1 differs from 1 by O(α²).
        assert_abs_diff_eq!(smith_g(0.3, 0.8, 0.0), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn backfacing_and_degenerate() {
        let n = DVec3::Z;
        let wi = DVec3::new(0.0, 0.866_025_403_784_438_6, -0.5);
        assert_eq!(specular_brdf(wi, n, n, 0.5, 0.04), 0.0);
        let w = DVec3::new(0.6, 0.0, 0.8);
        assert_eq!(specular_brdf(w, -w, n, 0.5, 0.04), 0.0);
    }

    #[test]
    fn factor_matches_brdf_times_cosine() {
        let n = DVec3::new(0.2, -0.1, 1.0).normalize();
        let wi = DVec3::new(0.5, 0.3, 0.8).normalize();
        let wo = DVec3::new(-0.4, 0.1, 0.9).normalize();
        for sigma in [0.05, 0.3, 0.8, 1.0] {
            let f = specular_brdf(wi, wo, n, sigma, 0.04) * n.dot(wi);
            assert_abs_diff_eq!(specular_factor(wi, wo, n, sigma, 0.04).0, f, epsilon = 1e-12);
        }
    }

    #[test]
    fn factor_gradient_matches_differences() {
        let wi = DVec3::new(0.5, 0.3, 0.8).normalize();
        let wo = DVec3::new(-0.4, 0.1, 0.9).normalize();
        let n = DVec3::new(0.1, 0.05, 1.1);
        let sigma = 0.45;
        let (_, g) = specular_factor_grad(wi, wo, n, sigma, 0.04);
        let eps = 1e-6;
        let val = |n: DVec3, s: f64| specular_factor(wi, wo, n, s, 0.04).0;
        for k in 0..3 {
            let mut e = DVec3::ZERO;
            e[k] = eps;
            let fd = (val(n + e, sigma) - val(n - e, sigma)) / (2.0 * eps);
            assert_abs_diff_eq!(g.normal[k], fd, epsilon = 1e-6 * fd.abs().max(1.0));
        }
        let fd = (val(n, sigma + eps) - val(n, sigma - eps)) / (2.0 * eps);
        assert_abs_diff_eq!(g.sigma, fd, epsilon = 1e-6 * fd.abs().max(1.0));
    }
}
