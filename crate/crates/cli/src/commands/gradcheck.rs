use std::path::PathBuf;

use clap::Args;
use glam::DVec3;
use gsrelight::fit::{
    attrs_of, check_gradients, perturb, recovery_targets, FreeAttributes, LossWeights, MeshNormalField, Objective,
    ParamLayout, FD_EPSILON,
};
use gsrelight::raster::RenderOptions;
use gsrelight::scene::{generate_sphere_asset, TriangleMesh};
use serde::Serialize;

use super::fit::{parse_free, parse_weights};
use super::{load_asset, Common, Output};
use crate::error::CliError;

#[derive(Debug, Clone, Args)]
pub struct CheckGradientsArgs {
    /// Ground-truth asset; a generated unit sphere when absent.
    #[arg(long)]
    pub asset: Option<PathBuf>,
    /// Mesh for normal distillation; an icosphere for the generated sphere.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Splats of the generated sphere.
    #[arg(long, default_value_t = 50)]
    pub splats: usize,
    #[arg(long, default_value_t = 4)]
    pub views: usize,
    #[arg(long, default_value_t = 32)]
    pub resolution: usize,
    /// Rotation of every normal away from the ground truth, in degrees.
    #[arg(long, default_value_t = 20.0)]
    pub perturb: f64,
    #[arg(long, value_parser = parse_free, default_value = "all")]
    pub free: FreeAttributes,
    #[arg(long, value_parser = parse_weights, default_value = "standard")]
    pub weights: LossWeights,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-3)]
    pub tolerance: f64,
}

#[derive(Debug, Serialize)]
struct Worst {
    splat: usize,
    attribute: &'static str,
    component: usize,
    analytic: f64,
    numeric: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    passed: bool,
    max_rel_error: f64,
    tolerance: f64,
    epsilon: f64,
    checked: usize,
    skipped: usize,
    worst: Option<Worst>,
}

pub const REPORT_FILE: &str = "gradcheck.json";

/// Central differences against the analytic gradient of the full objective
/// at a perturbed start. Writes the report, then fails with a validation
/// error if the tolerance is exceeded.
pub fn cmd_check_gradients(args: &CheckGradientsArgs, common: &Common) -> Result<Output, CliError> {
    if args.views == 0 || args.resolution == 0 {
        return Err(CliError::Usage("--views and --resolution must be positive".into()));
    }
    let gt = match &args.asset {
        Some(path) => load_asset(path)?,
        None => generate_sphere_asset(args.splats, 1.0, [0.6, 0.5, 0.45], 0.4, common.seed)?,
    };
    let mesh = match (&args.mesh, &args.asset) {
        (Some(path), _) => Some(MeshNormalField::new(TriangleMesh::load_obj(path)?)?),
        (None, None) => Some(MeshNormalField::new(TriangleMesh::icosphere(3, 1.0, DVec3::ZERO))?),
        (None, Some(_)) => None,
    };
    let mut weights = args.weights;
    if mesh.is_none() {
        weights.normal_d = 0.0;
    }
    let opts = RenderOptions::default();
    let targets = recovery_targets(&gt, args.views, args.resolution, &opts);
    let init = perturb(&gt, args.perturb, 0.3, common.seed);
    let objective = Objective::new(&init, &targets, &weights, mesh.as_ref(), &opts)?;
    let attrs = attrs_of(&init);
    let layout = ParamLayout::new(args.free, init.splats()[0].transport.width(), attrs.len());
    let r = check_gradients(&objective, &attrs, &layout, FD_EPSILON);
    let report = Report {
        passed: r.passed(args.tolerance),
        max_rel_error: r.max_rel_error,
        tolerance: args.tolerance,
        epsilon: FD_EPSILON,
        checked: r.checked,
        skipped: r.skipped.len(),
        worst: r.worst.map(|(id, analytic, numeric)| Worst {
            splat: id.splat,
            attribute: id.attribute,
            component: id.component,
            analytic,
            numeric,
        }),
    };
    let mut out = Output::new(&common.out)?;
    out.write(REPORT_FILE, serde_json::to_string_pretty(&report)?.as_bytes())?;
    println!(
        "{} max relative error {:.3e} over {} parameters ({} skipped at kinks)",
        if report.passed { "PASS" } else { "FAIL" },
        report.max_rel_error,
        report.checked,
        report.skipped
    );
    if !report.passed {
        return Err(CliError::Validation(format!(
            "max relative error {:.3e} >= {:.1e}",
            report.max_rel_error, args.tolerance
        )));
    }
    Ok(out)
}
