//! Frozen-geometry fitting of per-splat relighting attributes: losses,
//! analytic gradients, Adam, gradient checking and normal baselines.

mod adam;
mod experiment;
mod gradcheck;
mod losses;
mod normals;
mod objective;
mod params;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use adam::Adam;
pub use experiment::{perturb, recovery_targets, run_recovery, RecoveryConfig, RecoveryReport, Stage};
pub use gradcheck::{check_gradients, GradCheckReport, FD_EPSILON, REL_ERROR_FLOOR};
pub use losses::{
    loss_image, loss_normal_distill, loss_normal_tv, loss_prt, loss_pyramid, loss_tv_image, PYRAMID_LEVELS,
};
pub use normals::{
    closest_point_on_triangle, mean_angular_error_deg, normal_from_mesh, normal_knn, KnnNormals, MeshNormalField,
    NormalError,
};
pub use objective::{EvalRequest, Evaluation, FitTarget, LossTerms, LossWeights, Objective};
pub use params::{attrs_of, project_valid, write_back, FreeAttributes, ParamId, ParamLayout, NORMAL_SLACK};

use crate::raster::RenderOptions;
use crate::scene::{AssetError, HeadAsset};

/// Learning rate of the attribute optimizer.
pub const DEFAULT_LR: f64 = 5e-4;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),
    #[error("loss diverged at iteration {iteration}: {terms:?}")]
    Divergence { iteration: usize, terms: LossTerms },
    #[error(transparent)]
    Asset(#[from] AssetError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub iterations: usize,
    pub lr: f64,
    pub free: FreeAttributes,
    pub seed: u64,
    /// Targets per iteration; `None` uses all of them.
    pub batch_size: Option<usize>,
    pub render: RenderOptions,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            lr: DEFAULT_LR,
            free: FreeAttributes::default(),
            seed: 0,
            batch_size: None,
            render: RenderOptions::default(),
        }
    }
}

/// Loss values evaluated before the update of `iteration`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub terms: LossTerms,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub asset: HeadAsset,
    pub trace: Vec<TraceRow>,
}

/// Loss trace as CSV: `iteration`, each term, `total`.
pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut s = format!("iteration,{},total\n", LossTerms::NAMES.join(","));
    for r in trace {
        let terms: Vec<String> = r.terms.as_array().iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&format!("{},{},{:e}\n", r.iteration, terms.join(","), r.total));
    }
    s
}

/// Optimize the free attributes of `asset_init` against `targets` with Adam.
///
/// Geometry (position, rotation, scale, opacity) is never modified. Normal
/// gradients are projected onto the tangent plane before the Adam step; after
/// every step normals that drifted off unit length by more than
/// [`NORMAL_SLACK`] are renormalized, σ is clamped to `[0.01, 1]` and albedo
/// to `[0, 1]`. A non-finite loss aborts with
/// [`FitError::Divergence`].
pub fn fit(
    asset_init: &HeadAsset,
    targets: &[FitTarget],
    cfg: &FitConfig,
    weights: &LossWeights,
    mesh: Option<&MeshNormalField>,
) -> Result<FitResult, FitError> {
    if cfg.iterations == 0 || !(cfg.lr > 0.0) {
        return Err(FitError::InvalidConfig("iterations and learning rate must be positive".into()));
    }
    let objective = Objective::new(asset_init, targets, weights, mesh, &cfg.render)?;
    let mut attrs = attrs_of(asset_init);
    let layout = ParamLayout::new(cfg.free, asset_init.splats()[0].transport.width(), attrs.len());
    let mut x = layout.pack(&attrs);
    let mut adam = Adam::new(x.len(), cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = Vec::with_capacity(cfg.iterations);
    for iteration in 0..cfg.iterations {
        let subset: Option<Vec<usize>> = match cfg.batch_size {
            Some(b) if b < targets.len() => {
                let mut s = index::sample(&mut rng, targets.len(), b.max(1)).into_vec();
                s.sort_unstable();
                Some(s)
            }
            _ => None,
        };
        let eval = objective.evaluate(
            &attrs,
            subset.as_deref(),
            EvalRequest {
                grad: true,
                signature: false,
            },
        );
        if !eval.total.is_finite() {
            return Err(FitError::Divergence {
                iteration,
                terms: eval.terms,
            });
        }
        trace.push(TraceRow {
            iteration,
            terms: eval.terms,
            total: eval.total,
        });
        if iteration % 100 == 0 {
            log::debug!("fit iteration {iteration}: total {:.6e}", eval.total);
        }
        let mut grads = eval.grad.expect("gradient requested");
        if cfg.free.normal {
            // Only the tangential part moves a renormalized normal; the
            // radial part would otherwise leak into Adam's moments.
            for (g, a) in grads.iter_mut().zip(&attrs) {
                let n = a.normal;
                g.normal -= n * g.normal.dot(n);
            }
        }
        let g = layout.pack_grad(&grads);
        adam.step(&mut x, &g);
        layout.unpack(&x, &mut attrs);
        for a in attrs.iter_mut() {
            project_valid(a, &cfg.free);
        }
        x = layout.pack(&attrs);
    }
    let splats = asset_init.splats().iter().zip(&attrs).map(|(s, a)| write_back(s, a, &cfg.free)).collect();
    Ok(FitResult {
        asset: asset_init.with_splats(splats)?,
        trace,
    })
}
