//! Synthetic ground-truth assets with analytic transport.

use std::f64::consts::PI;

use glam::{DVec3, Quat, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::asset::{AssetError, AssetMeta, HeadAsset};
use super::splat::{Splat, Transport};
use crate::sh::{lambert_transport, DEFAULT_DEGREE};

/// Opacity given to generated splats.
pub const GENERATED_OPACITY: f32 = 0.9;
/// Thickness of generated splats along their normal, relative to the
/// tangential extent.
pub const FLATNESS: f64 = 0.05;

/// `n` points of a Fibonacci lattice on the unit sphere, rotated about `z`
/// by `phase`.
pub fn fibonacci_sphere(n: usize, phase: f64) -> Vec<DVec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64 + phase;
            DVec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

fn check_albedo(albedo: [f32; 3]) -> Result<(), AssetError> {
    if albedo.iter().all(|c| (0.0..=1.0).contains(c)) {
        Ok(())
    } else {
        Err(AssetError::InvariantViolation {
            index: 0,
            field: "albedo",
            detail: format!("{albedo:?} outside [0, 1]"),
        })
    }
}

/// A disc-like splat tangent to the sphere at `center + radius · dir`.
fn surface_splat(center: DVec3, radius: f64, dir: DVec3, extent: f64, albedo: [f32; 3], roughness: f32) -> Splat {
    let normal = dir.as_vec3().normalize();
    Splat {
        position: (center + dir * radius).as_vec3(),
        rotation: Quat::from_rotation_arc(Vec3::Z, normal).normalize(),
        scale: Vec3::new(extent as f32, extent as f32, (extent * FLATNESS) as f32),
        opacity: GENERATED_OPACITY,
        albedo: Vec3::from_array(albedo),
        normal,
        roughness,
        transport: Transport::gray(&lambert_transport(dir, DEFAULT_DEGREE).expect("unit normal")),
    }
}

fn tangential_extent(radius: f64, n: usize) -> f64 {
    // Half the mean lattice spacing: neighbouring discs overlap at ~2σ.
    0.55 * radius * (4.0 * PI / n as f64).sqrt()
}

/// Fibonacci-lattice sphere whose transport is the unshadowed Lambert kernel
/// `T_lm = (Â_l/π) · Y_lm(n)` of each splat's outward normal, identical on
/// all channels. The seed only rotates the lattice about `z`.
pub fn generate_sphere_asset(
    n_splats: usize,
    radius: f64,
    albedo: [f32; 3],
    roughness: f32,
    seed: u64,
) -> Result<HeadAsset, AssetError> {
    if n_splats < 16 {
        return Err(AssetError::MalformedHeader(format!("n_splats = {n_splats} < 16")));
    }
    check_albedo(albedo)?;
    let phase = ChaCha8Rng::seed_from_u64(seed).random::<f64>() * 2.0 * PI;
    let extent = tangential_extent(radius, n_splats);
    let splats = fibonacci_sphere(n_splats, phase)
        .into_iter()
        .map(|d| surface_splat(DVec3::ZERO, radius, d, extent, albedo, roughness))
        .collect();
    HeadAsset::new(
        splats,
        DEFAULT_DEGREE,
        AssetMeta {
            name: "sphere".into(),
            generator: format!("generate_sphere_asset n={n_splats} radius={radius} seed={seed}"),
            ground_truth: true,
        },
    )
}

/// Two spheres ("head" and "lobe") that shadow each other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLobeParams {
    pub n_splats: usize,
    pub main_radius: f64,
    pub lobe_radius: f64,
    /// Centre of the second lobe; the main sphere sits at the origin.
    pub lobe_center: DVec3,
    pub albedo: [f32; 3],
    pub roughness: f32,
    pub seed: u64,
}

/// Cosine-weighted fraction of the hemisphere around `normal` at `point`
/// left unblocked by a spherical occluder.
///
/// A cap of half-angle `β` (`sin β = r / d`) whose axis makes cosine `c`
/// with the normal blocks `sin²β · c` of the cosine-weighted hemisphere when
/// it lies fully above the horizon; that expression, clamped at `c ≤ 0`, is
/// used everywhere. Points inside the occluder use `sin β = 1`.
pub fn sphere_visibility(point: DVec3, normal: DVec3, occ_center: DVec3, occ_radius: f64) -> f64 {
    let to = occ_center - point;
    let dist = to.length();
    if dist == 0.0 {
        return 0.0;
    }
    let sin_beta = (occ_radius / dist).min(1.0);
    let c = normal.dot(to / dist).max(0.0);
    (1.0 - sin_beta * sin_beta * c).clamp(0.0, 1.0)
}

/// Two-lobe occluder pair. Splats are split between the lobes in proportion
/// to surface area; each splat's Lambert transport is scaled by
/// [`sphere_visibility`] against the other lobe. Coincident lobes (same
/// centre) do not shadow each other.
pub fn generate_two_lobe_asset(p: &TwoLobeParams) -> Result<HeadAsset, AssetError> {
    if p.n_splats < 16 {
        return Err(AssetError::MalformedHeader(format!("n_splats = {} < 16", p.n_splats)));
    }
    check_albedo(p.albedo)?;
    let phase = ChaCha8Rng::seed_from_u64(p.seed).random::<f64>() * 2.0 * PI;
    let area = |r: f64| r * r;
    let n_main = ((p.n_splats as f64 * area(p.main_radius) / (area(p.main_radius) + area(p.lobe_radius))).round()
        as usize)
        .clamp(8, p.n_splats - 8);
    let n_lobe = p.n_splats - n_main;
    let coincident = p.lobe_center.length() < 1e-12;
    let lobes = [
        (DVec3::ZERO, p.main_radius, n_main, p.lobe_center, p.lobe_radius),
        (p.lobe_center, p.lobe_radius, n_lobe, DVec3::ZERO, p.main_radius),
    ];
    let mut splats = Vec::with_capacity(p.n_splats);
    for (center, radius, count, occ_center, occ_radius) in lobes {
        let extent = tangential_extent(radius, count);
        for d in fibonacci_sphere(count, phase) {
            let mut s = surface_splat(center, radius, d, extent, p.albedo, p.roughness);
            if !coincident {
                let v = sphere_visibility(center + d * radius, d, occ_center, occ_radius);
                s.transport = s.transport.scaled(v as f32);
            }
            splats.push(s);
        }
    }
    HeadAsset::new(
        splats,
        DEFAULT_DEGREE,
        AssetMeta {
            name: "two-lobe".into(),
            generator: format!("generate_two_lobe_asset n={} seed={}", p.n_splats, p.seed),
            ground_truth: true,
        },
    )
}
