//! Synthetic ground-truth recovery: render a generated sphere under single
//! rig lights from a ring of views, perturb its normals and roughness, and
//! fit them back.

use std::time::{Duration, Instant};

use glam::{DMat3, DQuat, DVec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::normals::{mean_angular_error_deg, MeshNormalField};
use super::objective::{FitTarget, LossWeights};
use super::params::FreeAttributes;
use super::{fit, FitConfig, FitError, TraceRow, DEFAULT_LR};
use crate::lighting::{hemisphere_candidates, LightCondition, PointLight, OLAT_LIGHTS};
use crate::raster::{render_with, RenderOptions};
use crate::scene::{generate_sphere_asset, Camera, HeadAsset, Orbit, TriangleMesh};

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryConfig {
    pub n_splats: usize,
    pub radius: f64,
    pub albedo: [f32; 3],
    pub roughness: f32,
    pub views: usize,
    pub resolution: usize,
    pub normal_perturbation_deg: f64,
    pub roughness_offset: f64,
    /// Consecutive fits, each with its own free set and a fresh optimizer.
    pub schedule: Vec<Stage>,
    pub lr: f64,
    pub weights: LossWeights,
    /// Subdivision level of the icosphere used for normal distillation.
    pub mesh_subdivisions: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub iterations: usize,
    pub free: FreeAttributes,
}

impl RecoveryConfig {
    /// Normals alone first, then roughness, then transport. Roughness moved
    /// while normals are still far off gets pushed over the off-peak maximum
    /// of the GGX lobe and parks at σ = 1; transport freed early absorbs
    /// part of the roughness error.
    pub fn default_schedule() -> Vec<Stage> {
        let normal = FreeAttributes {
            normal: true,
            ..FreeAttributes::NONE
        };
        vec![
            Stage {
                iterations: 1000,
                free: normal,
            },
            Stage {
                iterations: 600,
                free: FreeAttributes {
                    roughness: true,
                    ..normal
                },
            },
            Stage {
                iterations: 400,
                free: FreeAttributes::default(),
            },
        ]
    }

    pub fn iterations(&self) -> usize {
        self.schedule.iter().map(|s| s.iterations).sum()
    }
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            n_splats: 400,
            radius: 1.0,
            albedo: [0.6, 0.5, 0.45],
            roughness: 0.4,
            views: 32,
            resolution: 64,
            normal_perturbation_deg: 20.0,
            roughness_offset: 0.3,
            schedule: Self::default_schedule(),
            lr: DEFAULT_LR,
            // The total-variation terms are left out: the ground truth is not
            // stationary under them, so they would bias what is recovered.
            weights: LossWeights {
                tv_img: 0.0,
                normal_tv: 0.0,
                ..LossWeights::STANDARD
            },
            mesh_subdivisions: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryReport {
    pub initial_normal_error_deg: f64,
    pub initial_roughness_error: f64,
    pub normal_error_deg: f64,
    pub roughness_error: f64,
    pub trace: Vec<TraceRow>,
    pub elapsed: Duration,
}

fn orbit_rotation(azimuth_deg: f64, elevation_deg: f64) -> DMat3 {
    // maps +z to the direction of an orbit camera at (azimuth, elevation)
    DMat3::from_rotation_y(azimuth_deg.to_radians()) * DMat3::from_rotation_x(-elevation_deg.to_radians())
}

/// Turntable protocol: `views` cameras around the vertical axis with
/// alternating elevations, each lit by one rig light. The rig turns with the
/// camera, as if the subject rotated inside a fixed light stage.
pub fn recovery_targets(gt: &HeadAsset, views: usize, resolution: usize, opts: &RenderOptions) -> Vec<FitTarget> {
    let rig = hemisphere_candidates(OLAT_LIGHTS);
    (0..views)
        .map(|v| {
            let azimuth = 360.0 * v as f64 / views as f64;
            let elevation = [-25.0, 0.0, 25.0][v % 3];
            let orbit = Orbit {
                azimuth,
                elevation,
                ..Orbit::default()
            };
            let camera = Camera::orbit(&orbit, resolution, resolution).expect("valid orbit");
            let dir = orbit_rotation(azimuth, elevation) * rig[(v * 7) % rig.len()];
            let condition = LightCondition::PointSet(vec![PointLight::white(dir)]);
            let image = render_with(gt, &camera, &condition, opts).expect("degree matches");
            FitTarget {
                camera,
                condition,
                image,
            }
        })
        .collect()
}

/// Rotate every normal by exactly `deg` about a random tangent axis and
/// offset roughness by `offset` (clamped to `(0, 1]`).
pub fn perturb(asset: &HeadAsset, deg: f64, offset: f64, seed: u64) -> HeadAsset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let splats = asset
        .splats()
        .iter()
        .map(|s| {
            let n = s.normal_f64();
            let t = n.any_orthonormal_vector();
            let axis = DQuat::from_axis_angle(n, rng.random::<f64>() * std::f64::consts::TAU) * t;
            let mut out = *s;
            out.normal = (DQuat::from_axis_angle(axis, deg.to_radians()) * n).normalize().as_vec3();
            out.roughness = ((s.roughness as f64 + offset).clamp(0.01, 1.0)) as f32;
            out
        })
        .collect();
    asset.with_splats(splats).expect("perturbation keeps invariants")
}

fn errors(fitted: &HeadAsset, gt: &HeadAsset) -> (f64, f64) {
    let nf: Vec<DVec3> = fitted.splats().iter().map(|s| s.normal_f64()).collect();
    let ng: Vec<DVec3> = gt.splats().iter().map(|s| s.normal_f64()).collect();
    let rough: f64 = fitted
        .splats()
        .iter()
        .zip(gt.splats())
        .map(|(a, b)| (a.roughness as f64 - b.roughness as f64).abs())
        .sum::<f64>()
        / gt.len() as f64;
    (mean_angular_error_deg(&nf, &ng), rough)
}

pub fn run_recovery(cfg: &RecoveryConfig) -> Result<RecoveryReport, FitError> {
    let start = Instant::now();
    let gt = generate_sphere_asset(cfg.n_splats, cfg.radius, cfg.albedo, cfg.roughness, cfg.seed)?;
    let opts = RenderOptions::default();
    let targets = recovery_targets(&gt, cfg.views, cfg.resolution, &opts);
    let init = perturb(&gt, cfg.normal_perturbation_deg, cfg.roughness_offset, cfg.seed ^ 0x5eed);
    let mesh = MeshNormalField::new(TriangleMesh::icosphere(cfg.mesh_subdivisions, cfg.radius, DVec3::ZERO))
        .map_err(|e| FitError::InvalidConfig(e.to_string()))?;
    let (n0, r0) = errors(&init, &gt);
    if cfg.schedule.is_empty() {
        return Err(FitError::InvalidConfig("empty schedule".into()));
    }
    let mesh_ref = (cfg.weights.normal_d > 0.0).then_some(&mesh);
    let mut asset = init;
    let mut trace = Vec::with_capacity(cfg.iterations());
    for stage in &cfg.schedule {
        let fit_cfg = FitConfig {
            iterations: stage.iterations,
            lr: cfg.lr,
            free: stage.free,
            seed: cfg.seed,
            batch_size: None,
            render: opts,
        };
        let result = fit(&asset, &targets, &fit_cfg, &cfg.weights, mesh_ref)?;
        let offset = trace.len();
        trace.extend(result.trace.into_iter().map(|r| TraceRow {
            iteration: r.iteration + offset,
            ..r
        }));
        asset = result.asset;
    }
    let (n1, r1) = errors(&asset, &gt);
    Ok(RecoveryReport {
        initial_normal_error_deg: n0,
        initial_roughness_error: r0,
        normal_error_deg: n1,
        roughness_error: r1,
        trace,
        elapsed: start.elapsed(),
    })
}
