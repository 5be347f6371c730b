use glam::DVec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnvMap, PointLight};

fn luminance(rgb: [f64; 3]) -> f64 {
    0.2126 * rgb[0] + 0.7152 * rgb[1] + 0.0722 * rgb[2]
}

/// Replace an environment map by `n` directional lights.
///
/// Texels are drawn with probability proportional to `luminance · sin θ`
/// (equivalently `luminance · ΔΩ`). A light drawn from texel `t` gets
///
/// ```text
/// I = L_t · E / (n · lum_t),     E = Σ_s lum_s · ΔΩ_s
/// ```
///
/// so `Σ_i I_i f(ω_i)` is an unbiased estimate of `∫ L(ω) f(ω) dω` for any
/// `f`, matching the solid-angle-free delta projection used for point
/// lights. Lights sit at texel centres. An all-black map yields `n`
/// zero-radiance lights along `+z`.
pub fn env_to_point_lights(env: &EnvMap, n: usize, seed: u64) -> Vec<PointLight> {
    let n = n.max(1);
    let mut cdf = Vec::with_capacity(env.width() * env.height());
    let mut total = 0.0;
    for row in 0..env.height() {
        let d_omega = env.texel_solid_angle(row);
        for col in 0..env.width() {
            total += luminance(env.get(col, row)) * d_omega;
            cdf.push(total);
        }
    }
    if !(total > 0.0) {
        return vec![
            PointLight {
                direction: DVec3::Z,
                radiance: [0.0; 3],
            };
            n
        ];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            // First texel whose cumulative weight exceeds u; zero-weight
            // texels have cdf equal to their predecessor and are never hit.
            let t = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            let (col, row) = (t % env.width(), t / env.width());
            let rgb = env.get(col, row);
            let scale = total / (n as f64 * luminance(rgb));
            PointLight {
                direction: env.texel_direction(col, row),
                radiance: rgb.map(|c| c * scale),
            }
        })
        .collect()
}
