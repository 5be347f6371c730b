use rayon::prelude::*;

use super::objective::{EvalRequest, Objective};
use super::params::{ParamId, ParamLayout};
use crate::shading::SurfaceAttrs;

/// Central-difference step.
pub const FD_EPSILON: f64 = 1e-4;
/// Denominator floor of the relative error, so that gradients that vanish
/// analytically are compared in absolute terms.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst: Option<(ParamId, f64, f64)>,
    pub checked: usize,
    /// Parameters whose difference stencil crossed a kink of the loss (an L1
    /// residual, a TV difference or a backfacing clamp changing sign).
    pub skipped: Vec<ParamId>,
}

impl GradCheckReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.checked > 0 && self.max_rel_error < tol
    }
}

/// Compare the analytic gradient of `objective` at `attrs` with central
/// differences on every parameter of `layout`. Parameters are perturbed as
/// given, before any renormalization.
pub fn check_gradients(objective: &Objective, attrs: &[SurfaceAttrs], layout: &ParamLayout, eps: f64) -> GradCheckReport {
    let base = objective.evaluate(attrs, None, EvalRequest { grad: true, signature: true });
    let analytic = layout.pack_grad(base.grad.as_deref().expect("gradient requested"));
    let x0 = layout.pack(attrs);
    let at = |i: usize, delta: f64| {
        let mut x = x0.clone();
        x[i] += delta;
        let mut a = attrs.to_vec();
        layout.unpack(&x, &mut a);
        objective.evaluate(&a, None, EvalRequest { grad: false, signature: true })
    };
    let results: Vec<(usize, Option<(f64, f64)>)> = (0..x0.len())
        .into_par_iter()
        .map(|i| {
            let (up, down) = (at(i, eps), at(i, -eps));
            if up.signature != base.signature || down.signature != base.signature {
                (i, None)
            } else {
                (i, Some((analytic[i], (up.total - down.total) / (2.0 * eps))))
            }
        })
        .collect();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
        skipped: Vec::new(),
    };
    for (i, r) in results {
        match r {
            None => report.skipped.push(layout.id(i)),
            Some((a, fd)) => {
                report.checked += 1;
                let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(REL_ERROR_FLOOR);
                if rel > report.max_rel_error || report.worst.is_none() {
                    report.max_rel_error = rel.max(report.max_rel_error);
                    report.worst = Some((layout.id(i), a, fd));
                }
            }
        }
    }
    report
}
