mod common;

use std::f64::consts::PI;

use common::random_unit;
use glam::DVec3;
use gsrelight::lighting::{
    env_to_point_lights, hemisphere_candidates, olat_protocol, sample_random_condition, EnvMap, LightCondition,
    OlatMode, RandomLightConfig, OLAT_LIGHTS, RANDOM_CONDITIONS,
};
use gsrelight::sh::{
    coeff_count, project_delta_light, project_envmap, sh_basis, sh_basis_flagged, sh_dot, ShError, ShVector,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Real SH from associated Legendre functions (no Condon-Shortley phase),
/// written independently of the library's closed forms.
fn reference_sh(dir: DVec3, l: i32, m: i32) -> f64 {
    fn factorial(n: i32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }
    fn legendre(l: i32, m: i32, x: f64) -> f64 {
        // P_m^m, then upward in l
        let mut pmm = 1.0;
        let s = (1.0 - x * x).max(0.0).sqrt();
        for i in 1..=m {
            pmm *= (2 * i - 1) as f64 * s;
        }
        if l == m {
            return pmm;
        }
        let mut pm1 = x * (2 * m + 1) as f64 * pmm;
        if l == m + 1 {
            return pm1;
        }
        let mut out = 0.0;
        for ll in (m + 2)..=l {
            out = ((2 * ll - 1) as f64 * x * pm1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
            pmm = pm1;
            pm1 = out;
        }
        out
    }
    let am = m.abs();
    let k = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - am) / factorial(l + am)).sqrt();
    let phi = dir.y.atan2(dir.x);
    let p = legendre(l, am, dir.z);
    match m {
        0 => k * p,
        m if m > 0 => 2f64.sqrt() * k * (m as f64 * phi).cos() * p,
        _ => 2f64.sqrt() * k * (am as f64 * phi).sin() * p,
    }
}

#[test]
fn basis_matches_legendre_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let d = random_unit(&mut rng);
        let y = sh_basis(d, 3).unwrap();
        for l in 0..=3 {
            for m in -l..=l {
                let i = (l * l + l + m) as usize;
                assert!((y.as_slice()[i] - reference_sh(d, l, m)).abs() < 1e-12, "l={l} m={m}");
            }
        }
    }
}

#[test]
fn pole_spot_values() {
    let z = DVec3::Z;
    assert!((sh_basis(z, 0).unwrap().as_slice()[0] - 0.2820948).abs() < 1e-7);
    let b1 = sh_basis(z, 1).unwrap();
    assert_eq!(b1.as_slice()[1], 0.0);
    assert!((b1.as_slice()[2] - 0.4886025).abs() < 1e-7);
    assert_eq!(b1.as_slice()[3], 0.0);
    let b2 = sh_basis(z, 2).unwrap();
    for (i, v) in b2.as_slice()[4..].iter().enumerate() {
        let expect = if i == 2 { 0.6307831 } else { 0.0 };
        assert!((v - expect).abs() < 1e-7);
    }
}

#[test]
fn orthonormality_monte_carlo() {
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut gram = [[0.0f64; 9]; 9];
    for _ in 0..n {
        let y = sh_basis(random_unit(&mut rng), 2).unwrap();
        let y = y.as_slice();
        for a in 0..9 {
            for b in a..9 {
                gram[a][b] += y[a] * y[b];
            }
        }
    }
    let w = 4.0 * PI / n as f64;
    for a in 0..9 {
        for b in a..9 {
            let expect = if a == b { 1.0 } else { 0.0 };
            assert!((gram[a][b] * w - expect).abs() < 0.01, "({a},{b}) = {}", gram[a][b] * w);
        }
    }
}

#[test]
fn degree_and_direction_errors() {
    assert!(matches!(sh_basis(DVec3::Z, 4), Err(ShError::UnsupportedDegree(4))));
    assert!(sh_basis(DVec3::ZERO, 2).is_err());
    let (_, flagged) = sh_basis_flagged(DVec3::new(0.0, 0.0, 2.0), 2).unwrap();
    assert!(flagged);
    let (_, flagged) = sh_basis_flagged(DVec3::Z, 2).unwrap();
    assert!(!flagged);
}

#[test]
fn delta_light_examples() {
    let p = project_delta_light(DVec3::Z, [1.0; 3], 2).unwrap();
    for c in &p.channels {
        assert!((c.as_slice()[0] - 0.2820948).abs() < 1e-7);
    }
    let zero = project_delta_light(DVec3::Z, [0.0; 3], 2).unwrap();
    assert!(zero.channels.iter().all(|c| c.as_slice().iter().all(|&v| v == 0.0)));
    let red = project_delta_light(DVec3::Z, [2.0, 0.0, 0.0], 2).unwrap();
    let unit = sh_basis(DVec3::Z, 2).unwrap();
    for (r, u) in red.channels[0].as_slice().iter().zip(unit.as_slice()) {
        assert_eq!(*r, 2.0 * u);
    }
    assert!(red.channels[1].as_slice().iter().chain(red.channels[2].as_slice()).all(|&v| v == 0.0));
    assert!(matches!(project_delta_light(DVec3::Z, [-1.0, 0.0, 0.0], 2), Err(ShError::NegativeRadiance(_))));
}

#[test]
fn constant_envmap_projects_to_dc() {
    let c = [0.5f32, 1.0, 2.0];
    let env = EnvMap::constant(128, 64, c).unwrap();
    let sh = project_envmap(&env, 2).unwrap();
    for (ch, v) in sh.channels.iter().zip(c) {
        let dc = ch.as_slice()[0];
        assert!((dc / (3.5449077 * v as f64) - 1.0).abs() < 0.01, "{dc}");
        for hi in &ch.as_slice()[1..] {
            assert!(hi.abs() < 0.01 * dc);
        }
    }
}

#[test]
fn zero_envmap_projects_to_zero() {
    let env = EnvMap::constant(16, 8, [0.0; 3]).unwrap();
    let sh = project_envmap(&env, 2).unwrap();
    assert!(sh.channels.iter().all(|c| c.as_slice().iter().all(|&v| v == 0.0)));
}

#[test]
fn envmap_validation() {
    assert!(EnvMap::new(0, 0, vec![]).is_err());
    assert!(EnvMap::new(2, 2, vec![[1.0; 3]; 4]).is_err());
    assert!(EnvMap::new(4, 2, vec![[1.0; 3]; 7]).is_err());
    let mut t = vec![[1.0f32; 3]; 8];
    t[3] = [-1.0, 0.0, 0.0];
    assert!(EnvMap::new(4, 2, t).is_err());
}

#[test]
fn sh_dot_examples() {
    let mut a = ShVector::zeros(2).unwrap();
    a.as_mut_slice()[0] = 1.0;
    assert_eq!(sh_dot(&a, &a).unwrap(), 1.0);
    let a = ShVector::from_slice(2, &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    let b = ShVector::from_slice(2, &[3.0, 4.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    assert_eq!(sh_dot(&a, &b).unwrap(), 11.0);
    assert!(sh_dot(&a, &ShVector::zeros(1).unwrap()).is_err());
}

#[test]
fn hemisphere_candidate_examples() {
    let one = hemisphere_candidates(1);
    assert_eq!(one.len(), 1);
    assert!(one[0].z > 0.0);
    let many = hemisphere_candidates(1000);
    assert!(many.iter().all(|d| d.z >= 0.0 && (d.length() - 1.0).abs() < 1e-12));
    let mean = many.iter().sum::<DVec3>() / 1000.0;
    assert!((mean - DVec3::new(0.0, 0.0, 0.5)).length() < 0.05);
    assert_eq!(hemisphere_candidates(46), hemisphere_candidates(46));
}

fn random_cfg(seed: u64) -> RandomLightConfig {
    RandomLightConfig {
        n_candidates: 46,
        subset_min: 3,
        subset_max: 12,
        intensity_range: [0.2, 1.5],
        seed,
    }
}

#[test]
fn random_conditions() {
    assert_eq!(sample_random_condition(&random_cfg(4)).unwrap(), sample_random_condition(&random_cfg(4)).unwrap());
    let black = RandomLightConfig {
        intensity_range: [0.0, 0.0],
        ..random_cfg(1)
    };
    let LightCondition::PointSet(lights) = sample_random_condition(&black).unwrap() else { panic!() };
    assert!(lights.iter().all(|l| l.radiance == [0.0; 3]));
    for seed in 0..10_000 {
        let cfg = RandomLightConfig {
            subset_min: 10,
            subset_max: 10,
            ..random_cfg(seed)
        };
        let LightCondition::PointSet(lights) = sample_random_condition(&cfg).unwrap() else { panic!() };
        assert_eq!(lights.len(), 10);
    }
    let bad = RandomLightConfig {
        subset_min: 5,
        subset_max: 4,
        ..random_cfg(0)
    };
    assert!(sample_random_condition(&bad).is_err());
}

#[test]
fn olat_protocol_counts() {
    let uniform = olat_protocol(OlatMode::Uniform, OLAT_LIGHTS, 0).unwrap();
    assert_eq!(uniform.len(), 1);
    assert_eq!(uniform[0].lights.len(), 46);
    let direction = olat_protocol(OlatMode::Direction, OLAT_LIGHTS, 0).unwrap();
    assert_eq!(direction.len(), 46);
    assert!(direction.iter().all(|c| c.lights.len() == 5));
    for (mode, size) in [(OlatMode::Random10, 10), (OlatMode::Random20, 20)] {
        let a = olat_protocol(mode, OLAT_LIGHTS, 3).unwrap();
        assert_eq!(a, olat_protocol(mode, OLAT_LIGHTS, 3).unwrap());
        assert_eq!(a.len(), RANDOM_CONDITIONS);
        assert!(a.iter().all(|c| c.lights.len() == size));
    }
    assert!("sideways".parse::<OlatMode>().is_err());
}

#[test]
fn direction_mode_lights_are_neighbours() {
    let rig = hemisphere_candidates(OLAT_LIGHTS);
    for c in olat_protocol(OlatMode::Direction, OLAT_LIGHTS, 0).unwrap() {
        let centre = rig[c.active[0]];
        let worst = c.active[1..].iter().map(|&j| centre.dot(rig[j])).fold(1.0, f64::min);
        let others = (0..OLAT_LIGHTS).filter(|j| !c.active.contains(j));
        assert!(others.into_iter().all(|j| centre.dot(rig[j]) <= worst + 1e-12));
    }
}

#[test]
fn single_hot_texel_gives_one_direction() {
    let mut texels = vec![[0.0f32; 3]; 32 * 16];
    texels[5 * 32 + 7] = [3.0, 2.0, 1.0];
    let env = EnvMap::new(32, 16, texels).unwrap();
    let lights = env_to_point_lights(&env, 50, 9);
    let d = env.texel_direction(7, 5);
    assert!(lights.iter().all(|l| (l.direction - d).length() < 1e-12));
}

#[test]
fn black_env_gives_zero_lights() {
    let env = EnvMap::constant(8, 4, [0.0; 3]).unwrap();
    let lights = env_to_point_lights(&env, 7, 0);
    assert_eq!(lights.len(), 7);
    assert!(lights.iter().all(|l| l.radiance == [0.0; 3]));
}

#[test]
fn constant_env_samples_are_uniform_over_octants() {
    let env = EnvMap::constant(256, 128, [1.0; 3]).unwrap();
    let n = 100_000;
    let mut counts = [0usize; 8];
    for l in env_to_point_lights(&env, n, 1) {
        let d = l.direction;
        counts[(d.x > 0.0) as usize | ((d.y > 0.0) as usize) << 1 | ((d.z > 0.0) as usize) << 2] += 1;
    }
    let e = n as f64 / 8.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 7 degrees of freedom, p = 0.01 quantile
    assert!(chi2 < 18.475, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn doubling_env_doubles_sampled_lights() {
    let env = EnvMap::preset("sunset", 64, 32).unwrap();
    let a = env_to_point_lights(&env, 32, 5);
    let b = env_to_point_lights(&env.scaled(2.0), 32, 5);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.direction, y.direction);
        for c in 0..3 {
            assert!((2.0 * x.radiance[c] - y.radiance[c]).abs() < 1e-9 * y.radiance[c].max(1.0));
        }
    }
}

#[test]
fn env_sh_and_sampled_lights_agree_on_dc() {
    for name in ["sky", "split", "white"] {
        let env = EnvMap::preset(name, 128, 64).unwrap();
        let direct = project_envmap(&env, 2).unwrap();
        let mut via = [0.0; 3];
        for l in env_to_point_lights(&env, 4096, 11) {
            let p = project_delta_light(l.direction, l.radiance, 2).unwrap();
            for c in 0..3 {
                via[c] += p.channels[c].as_slice()[0];
            }
        }
        for c in 0..3 {
            let d = direct.channels[c].as_slice()[0];
            assert!((via[c] / d - 1.0).abs() < 0.03, "{name} channel {c}: {} vs {d}", via[c]);
        }
    }
}

proptest! {
    #[test]
    fn near_unit_renormalization_is_invisible(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0, eps in -1e-7f64..1e-7) {
        let d = DVec3::new(x, y, z);
        prop_assume!(d.length() > 0.1);
        let u = d.normalize();
        let a = sh_basis(u, 3).unwrap();
        let b = sh_basis(u * (1.0 + eps), 3).unwrap();
        for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_projection_is_linear(a in 0.0f64..5.0, b in 0.0f64..5.0, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_unit(&mut rng);
        let one = project_delta_light(d, [1.0, 0.5, 0.25], 2).unwrap();
        let mix = project_delta_light(d, [a + b, (a + b) * 0.5, (a + b) * 0.25], 2).unwrap();
        for c in 0..3 {
            for (m, o) in mix.channels[c].as_slice().iter().zip(one.channels[c].as_slice()) {
                prop_assert!((m - (a + b) * o).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn envmap_projection_is_additive(seed in 0u64..200) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mk = |rng: &mut ChaCha8Rng| (0..16 * 8).map(|_| [rng.random::<f32>(), rng.random::<f32>(), rng.random::<f32>()]).collect::<Vec<_>>();
        let (ta, tb) = (mk(&mut rng), mk(&mut rng));
        let sum: Vec<[f32; 3]> = ta.iter().zip(&tb).map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]).collect();
        let pa = project_envmap(&EnvMap::new(16, 8, ta).unwrap(), 2).unwrap();
        let pb = project_envmap(&EnvMap::new(16, 8, tb).unwrap(), 2).unwrap();
        let ps = project_envmap(&EnvMap::new(16, 8, sum).unwrap(), 2).unwrap();
        for c in 0..3 {
            for i in 0..coeff_count(2) {
                let lhs = ps.channels[c].as_slice()[i];
                let rhs = pa.channels[c].as_slice()[i] + pb.channels[c].as_slice()[i];
                prop_assert!((lhs - rhs).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn sh_dot_of_basis_is_sum_of_squares(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = sh_basis(random_unit(&mut rng), 3).unwrap();
        let brute: f64 = y.as_slice().iter().map(|v| v * v).sum();
        prop_assert!((sh_dot(&y, &y).unwrap() - brute).abs() < 1e-12);
        // addition theorem: Σ_m Y_lm² = (2l+1)/4π per band
        prop_assert!((brute - 16.0 / (4.0 * PI)).abs() < 1e-9);
    }
}
