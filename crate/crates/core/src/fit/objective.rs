//! The frozen-geometry objective: losses and analytic gradients with respect
//! to per-splat relighting attributes.
//!
//! With geometry fixed, every rendered pixel is `Σ_k w_pk c_k` with cached
//! weights, so gradients flow image → per-splat colour (adjoint of the
//! weight cache) → shading attributes.

use std::hash::{DefaultHasher, Hasher};

use glam::DVec3;
use rayon::prelude::*;

use super::losses::{l1, l1_signs, pyramid, pyramid_signs, tv, tv_signs};
use super::normals::{normal_from_mesh, MeshNormalField};
use super::FitError;
use crate::lighting::LightCondition;
use crate::raster::{extract_weight_cache, view_direction, ImageBuffer, RenderOptions, WeightCache};
use crate::scene::{Camera, HeadAsset};
use crate::shading::{shade_attrs, shade_attrs_grad, specular_pattern, AttrGrad, PreparedLight, SurfaceAttrs};

/// One observation: an image of the asset under a light from a camera.
#[derive(Debug, Clone)]
pub struct FitTarget {
    pub camera: Camera,
    pub condition: LightCondition,
    pub image: ImageBuffer,
}

/// Non-negative weights of the loss terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub img: f64,
    /// Multi-scale L1 standing in for the perceptual term.
    pub pyramid: f64,
    pub tv_img: f64,
    pub prt: f64,
    pub normal_d: f64,
    pub normal_tv: f64,
}

impl LossWeights {
    /// Stage-2 weights: image 0.1, perceptual 1, image TV 1, transport
    /// variance 10, normal distillation 1, normal TV 10.
    pub const STANDARD: Self = Self {
        img: 0.1,
        pyramid: 1.0,
        tv_img: 1.0,
        prt: 10.0,
        normal_d: 1.0,
        normal_tv: 10.0,
    };

    pub const ZERO: Self = Self {
        img: 0.0,
        pyramid: 0.0,
        tv_img: 0.0,
        prt: 0.0,
        normal_d: 0.0,
        normal_tv: 0.0,
    };

    pub fn as_array(&self) -> [f64; 6] {
        [self.img, self.pyramid, self.tv_img, self.prt, self.normal_d, self.normal_tv]
    }

    pub fn validate(&self) -> Result<(), FitError> {
        if self.as_array().iter().all(|w| w.is_finite() && *w >= 0.0) {
            Ok(())
        } else {
            Err(FitError::InvalidConfig(format!("loss weights must be finite and non-negative: {self:?}")))
        }
    }
}

/// Unweighted loss values. Image terms are averaged over targets; TV terms
/// inside the objective are normalized by `3·W·H`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossTerms {
    pub img: f64,
    pub pyramid: f64,
    pub tv_img: f64,
    pub prt: f64,
    pub normal_d: f64,
    pub normal_tv: f64,
}

impl LossTerms {
    pub const NAMES: [&'static str; 6] = ["img", "pyramid", "tv_img", "prt", "normal_d", "normal_tv"];

    pub fn as_array(&self) -> [f64; 6] {
        [self.img, self.pyramid, self.tv_img, self.prt, self.normal_d, self.normal_tv]
    }

    pub fn total(&self, w: &LossWeights) -> f64 {
        self.as_array().iter().zip(w.as_array()).map(|(t, w)| if w == 0.0 { 0.0 } else { t * w }).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub terms: LossTerms,
    pub total: f64,
    /// Per-splat gradient of `total`, when requested.
    pub grad: Option<Vec<AttrGrad>>,
    /// Hash of the sign pattern of every non-smooth operation; equal
    /// signatures mean the same smooth piece of the loss.
    pub signature: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalRequest {
    pub grad: bool,
    pub signature: bool,
}

struct PreparedTarget {
    cache_id: usize,
    light: PreparedLight,
    view_dirs: Vec<DVec3>,
    image: ImageBuffer,
}

/// Targets preprocessed against a frozen geometry.
pub struct Objective {
    targets: Vec<PreparedTarget>,
    /// One weight cache per distinct camera.
    caches: Vec<WeightCache>,
    mesh_normals: Option<Vec<DVec3>>,
    weights: LossWeights,
    f0: f64,
    clamp_negative: bool,
    n_splats: usize,
}

struct TargetOut {
    img: f64,
    pyramid: f64,
    tv_img: f64,
    grad: Vec<AttrGrad>,
    signature: u64,
}

impl Objective {
    pub fn new(
        asset: &HeadAsset,
        targets: &[FitTarget],
        weights: &LossWeights,
        mesh: Option<&MeshNormalField>,
        opts: &RenderOptions,
    ) -> Result<Self, FitError> {
        weights.validate()?;
        if targets.is_empty() {
            return Err(FitError::InvalidConfig("no targets".into()));
        }
        if weights.normal_d > 0.0 && mesh.is_none() {
            return Err(FitError::InvalidConfig("normal distillation needs a mesh".into()));
        }
        let mut cameras: Vec<Camera> = Vec::new();
        let mut prepared = Vec::with_capacity(targets.len());
        for (i, t) in targets.iter().enumerate() {
            if t.image.width != t.camera.width || t.image.height != t.camera.height {
                return Err(FitError::InvalidConfig(format!("target {i}: image does not match camera resolution")));
            }
            let cache_id = match cameras.iter().position(|c| *c == t.camera) {
                Some(id) => id,
                None => {
                    cameras.push(t.camera);
                    cameras.len() - 1
                }
            };
            let light = PreparedLight::new(&t.condition, asset.sh_degree(), opts.env_samples, opts.env_seed)
                .map_err(|e| FitError::InvalidConfig(format!("target {i}: {e}")))?;
            prepared.push(PreparedTarget {
                cache_id,
                light,
                view_dirs: asset.splats().iter().map(|s| view_direction(s.position_f64(), &t.camera)).collect(),
                image: t.image.clone(),
            });
        }
        let caches = cameras.par_iter().map(|c| extract_weight_cache(asset, c)).collect();
        Ok(Self {
            targets: prepared,
            caches,
            mesh_normals: mesh.map(|m| normal_from_mesh(asset, m)),
            weights: *weights,
            f0: opts.material.f0,
            clamp_negative: opts.clamp_negative,
            n_splats: asset.len(),
        })
    }

    pub fn weights(&self) -> &LossWeights {
        &self.weights
    }

    pub fn target_count(&self) -> usize {
        self.targets.len()
    }

    /// Shaded colours of target `i`, as the renderer would produce them.
    pub fn colors(&self, i: usize, attrs: &[SurfaceAttrs]) -> Vec<[f64; 3]> {
        let t = &self.targets[i];
        attrs
            .iter()
            .zip(&t.view_dirs)
            .map(|(a, wo)| {
                let c = shade_attrs(a, &t.light, *wo, self.f0);
                if self.clamp_negative {
                    c.map(|v| v.max(0.0))
                } else {
                    c
                }
            })
            .collect()
    }

    /// Prediction for target `i` through the weight cache.
    pub fn predict(&self, i: usize, attrs: &[SurfaceAttrs]) -> ImageBuffer {
        self.caches[self.targets[i].cache_id].reconstruct(&self.colors(i, attrs))
    }

    /// Evaluate on all targets, or on `subset` (target indices) when given.
    pub fn evaluate(&self, attrs: &[SurfaceAttrs], subset: Option<&[usize]>, req: EvalRequest) -> Evaluation {
        assert_eq!(attrs.len(), self.n_splats, "attribute count");
        let all: Vec<usize>;
        let ids = match subset {
            Some(s) => s,
            None => {
                all = (0..self.targets.len()).collect();
                &all
            }
        };
        let w = &self.weights;
        let nt = ids.len() as f64;
        let outs: Vec<TargetOut> = ids.par_iter().map(|&i| self.eval_target(i, attrs, nt, req)).collect();

        let mut terms = LossTerms::default();
        let mut grad = req.grad.then(|| vec![AttrGrad::default(); self.n_splats]);
        let mut hasher = DefaultHasher::new();
        for o in &outs {
            terms.img += o.img / nt;
            terms.pyramid += o.pyramid / nt;
            terms.tv_img += o.tv_img / nt;
            if let Some(g) = grad.as_mut() {
                add_grads(g, &o.grad);
            }
            hasher.write_u64(o.signature);
        }

        let n = self.n_splats as f64;
        // transport variance across channels
        let mut prt = 0.0;
        for (k, a) in attrs.iter().enumerate() {
            for j in 0..a.width {
                let m = (a.transport[0][j] + a.transport[1][j] + a.transport[2][j]) / 3.0;
                for c in 0..3 {
                    let d = a.transport[c][j] - m;
                    prt += d * d;
                    if let Some(g) = grad.as_mut() {
                        if w.prt != 0.0 {
                            g[k].transport[c][j] += w.prt * 2.0 * d / n;
                        }
                    }
                }
            }
        }
        terms.prt = prt / n;

        if let Some(mesh) = &self.mesh_normals {
            let mut sum = 0.0;
            for (k, (a, m)) in attrs.iter().zip(mesh).enumerate() {
                sum += 1.0 - a.normal.dot(*m);
                if let Some(g) = grad.as_mut() {
                    g[k].normal -= *m * (w.normal_d / n);
                }
            }
            terms.normal_d = sum / n;
        }

        if w.normal_tv > 0.0 || req.signature {
            let payload: Vec<[f64; 3]> = attrs.iter().map(|a| ((a.normal + DVec3::ONE) * 0.5).to_array()).collect();
            let nc = self.caches.len() as f64;
            let per_cam: Vec<(f64, Option<Vec<[f64; 3]>>, u64)> = self
                .caches
                .par_iter()
                .map(|cache| {
                    let map = cache.reconstruct(&payload);
                    let px = (3 * map.len()).max(1) as f64;
                    let mut gimg = req.grad.then(|| vec![[0.0; 3]; map.len()]);
                    let v = tv(&map, gimg.as_deref_mut(), w.normal_tv / (px * nc));
                    let gpay = gimg.map(|gi| {
                        let mut gp = vec![[0.0; 3]; payload.len()];
                        cache.backproject(&gi, &mut gp);
                        gp
                    });
                    let mut h = DefaultHasher::new();
                    if req.signature {
                        tv_signs(&map, &mut |s| h.write_i8(s));
                    }
                    (v / px, gpay, h.finish())
                })
                .collect();
            for (v, gp, sig) in per_cam {
                terms.normal_tv += v / nc;
                if let (Some(g), Some(gp)) = (grad.as_mut(), gp) {
                    for (gk, p) in g.iter_mut().zip(gp) {
                        gk.normal += DVec3::from_array(p) * 0.5;
                    }
                }
                hasher.write_u64(sig);
            }
        }

        Evaluation {
            total: terms.total(w),
            terms,
            grad,
            signature: if req.signature { hasher.finish() } else { 0 },
        }
    }

    fn eval_target(&self, i: usize, attrs: &[SurfaceAttrs], nt: f64, req: EvalRequest) -> TargetOut {
        let t = &self.targets[i];
        let cache = &self.caches[t.cache_id];
        let w = &self.weights;
        let raw: Vec<[f64; 3]> = attrs.iter().zip(&t.view_dirs).map(|(a, wo)| shade_attrs(a, &t.light, *wo, self.f0)).collect();
        let colors: Vec<[f64; 3]> = if self.clamp_negative {
            raw.iter().map(|c| c.map(|v| v.max(0.0))).collect()
        } else {
            raw.clone()
        };
        let pred = cache.reconstruct(&colors);
        let px = (3 * pred.len()).max(1) as f64;

        let mut gimg = req.grad.then(|| vec![[0.0; 3]; pred.len()]);
        let img = l1(&pred, &t.image, gimg.as_deref_mut(), w.img / nt);
        let pyr = pyramid(&pred, &t.image, gimg.as_deref_mut(), w.pyramid / nt);
        let tvi = tv(&pred, gimg.as_deref_mut(), w.tv_img / (px * nt)) / px;

        let mut grad = Vec::new();
        if let Some(gi) = gimg {
            let mut gc = vec![[0.0; 3]; attrs.len()];
            cache.backproject(&gi, &mut gc);
            grad = vec![AttrGrad::default(); attrs.len()];
            for k in 0..attrs.len() {
                let mut up = gc[k];
                if self.clamp_negative {
                    for c in 0..3 {
                        if raw[k][c] < 0.0 {
                            up[c] = 0.0;
                        }
                    }
                }
                if up != [0.0; 3] {
                    shade_attrs_grad(&attrs[k], &t.light, t.view_dirs[k], self.f0, up, &mut grad[k]);
                }
            }
        }

        let mut signature = 0;
        if req.signature {
            let mut h = DefaultHasher::new();
            let mut sink = |s: i8| h.write_i8(s);
            l1_signs(&pred, &t.image, &mut sink);
            pyramid_signs(&pred, &t.image, &mut sink);
            tv_signs(&pred, &mut sink);
            for (k, a) in attrs.iter().enumerate() {
                specular_pattern(a, &t.light, t.view_dirs[k], self.f0, |p| h.write_u8(p));
                if self.clamp_negative {
                    for c in raw[k] {
                        h.write_u8((c < 0.0) as u8);
                    }
                }
            }
            signature = h.finish();
        }
        TargetOut {
            img,
            pyramid: pyr,
            tv_img: tvi,
            grad,
            signature,
        }
    }
}

fn add_grads(acc: &mut [AttrGrad], g: &[AttrGrad]) {
    for (a, b) in acc.iter_mut().zip(g) {
        for c in 0..3 {
            a.albedo[c] += b.albedo[c];
            for j in 0..a.transport[c].len() {
                a.transport[c][j] += b.transport[c][j];
            }
        }
        a.normal += b.normal;
        a.roughness += b.roughness;
    }
}
