#![allow(dead_code)]

use glam::{DVec3, Quat, Vec3};
use gsrelight::lighting::PointLight;
use gsrelight::scene::{generate_sphere_asset, AssetMeta, Camera, HeadAsset, Orbit, Splat, Transport};
use gsrelight::sh::DEFAULT_DEGREE;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Unit vector uniform on the sphere.
pub fn random_unit(rng: &mut impl Rng) -> DVec3 {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).sqrt();
    DVec3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Splats scattered through a cube with random orientation, shape and
/// material; transport entries are arbitrary, not physical.
pub fn random_asset(n: usize, seed: u64) -> HeadAsset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let splats = (0..n)
        .map(|_| {
            let mut transport = Transport::zeros(DEFAULT_DEGREE);
            for c in 0..3 {
                for t in transport.row_mut(c) {
                    *t = rng.random_range(-0.3..0.6);
                }
            }
            let axis = random_unit(&mut rng).as_vec3();
            Splat {
                position: Vec3::new(rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8)),
                rotation: Quat::from_axis_angle(axis, rng.random_range(0.0..6.28)),
                scale: Vec3::new(
                    rng.random_range(0.01..0.12),
                    rng.random_range(0.01..0.12),
                    rng.random_range(0.002..0.05),
                ),
                opacity: rng.random_range(0.05..1.0),
                albedo: Vec3::new(rng.random(), rng.random(), rng.random()),
                normal: random_unit(&mut rng).as_vec3(),
                roughness: rng.random_range(0.05..1.0),
                transport,
            }
        })
        .collect();
    HeadAsset::new(
        splats,
        DEFAULT_DEGREE,
        AssetMeta {
            name: "random".into(),
            generator: format!("random_asset n={n} seed={seed}"),
            ground_truth: false,
        },
    )
    .expect("random splats satisfy the invariants")
}

pub fn front_camera(width: usize, height: usize) -> Camera {
    Camera::orbit(&Orbit::default(), width, height).unwrap()
}

pub fn orbit_camera(azimuth: f64, elevation: f64, res: usize) -> Camera {
    let orbit = Orbit {
        azimuth,
        elevation,
        ..Orbit::default()
    };
    Camera::orbit(&orbit, res, res).unwrap()
}

/// Lights on the full sphere with random colour.
pub fn random_lights(n: usize, seed: u64) -> Vec<PointLight> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let d = random_unit(&mut rng);
            PointLight::new(d, [rng.random_range(0.2..1.5), rng.random_range(0.2..1.5), rng.random_range(0.2..1.5)])
                .unwrap()
        })
        .collect()
}

/// Unit sphere splats displaced by up to `amplitude` along random
/// directions, with their clean radial normals as ground truth.
pub fn noisy_sphere(n: usize, amplitude: f64, seed: u64) -> (HeadAsset, Vec<DVec3>) {
    let clean = generate_sphere_asset(n, 1.0, [0.5; 3], 0.5, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gt: Vec<DVec3> = clean.splats().iter().map(|s| s.normal_f64()).collect();
    let splats = clean
        .splats()
        .iter()
        .map(|s| {
            let mut s = *s;
            s.position += (random_unit(&mut rng) * amplitude * rng.random::<f64>()).as_vec3();
            s
        })
        .collect();
    (clean.with_splats(splats).unwrap(), gt)
}
