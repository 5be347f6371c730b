use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use clap::{CommandFactory, Parser};
use gsr_cli::error::{
    EXIT_DIVERGENCE, EXIT_INVARIANT, EXIT_IO, EXIT_MALFORMED, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION,
};
use gsr_cli::manifest::{Manifest, MANIFEST_FILE};
use gsr_cli::{run, Cli};
use gsrelight::imageio::{encode_pfm, load_pfm, LinearImage};
use gsrelight::lighting::{LightCondition, PointLight};
use gsrelight::raster::{render_with, RenderOptions};
use gsrelight::scene::{Camera, HeadAsset, Orbit};
use tempfile::TempDir;

fn cli(args: &[&str]) -> Cli {
    Cli::try_parse_from(std::iter::once("gsr").chain(args.iter().copied())).expect("valid arguments")
}

fn gsr(args: &[&str]) -> Vec<PathBuf> {
    run(&cli(args)).expect("command succeeds").written
}

fn exit_code(args: &[&str], threads: Option<&str>) -> i32 {
    let mut cmd = Process::new(env!("CARGO_BIN_EXE_gsr"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("GSR_THREADS", t),
        None => cmd.env_remove("GSR_THREADS"),
    };
    let out = cmd.output().expect("binary runs");
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small generated sphere and its icosphere mesh in `dir`.
fn sphere(dir: &Path, splats: usize) -> (PathBuf, PathBuf) {
    gsr(&["gen-asset", "--splats", &splats.to_string(), "--mesh", "--name", "sphere", "--out", s(dir)]);
    (dir.join("sphere.gsr"), dir.join("sphere.obj"))
}

fn max_abs_diff(a: &LinearImage, b: &LinearImage) -> f32 {
    assert_eq!((a.width, a.height), (b.width, b.height));
    a.rgb
        .iter()
        .zip(&b.rgb)
        .flat_map(|(x, y)| (0..3).map(move |c| (x[c] - y[c]).abs()))
        .fold(0.0, f32::max)
}

#[test]
fn argument_definitions_are_consistent() {
    Cli::command().debug_assert();
}

#[test]
fn uniform_protocol_manifest_lists_one_condition() {
    let tmp = TempDir::new().unwrap();
    let (asset, _) = sphere(tmp.path(), 200);
    let out = tmp.path().join("olat");
    gsr(&["olat", "--asset", s(&asset), "--mode", "uniform", "--width", "24", "--height", "24", "--out", s(&out)]);
    let m = Manifest::from_json(&fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(m.mode, "uniform");
    assert_eq!(m.conditions.len(), 1);
    assert_eq!(m.conditions[0].active, (0..46).collect::<Vec<_>>());
    assert_eq!(m.conditions[0].lights.len(), 46);
    assert_eq!(m.images.len(), 1);
    assert!(out.join(&m.images[0].image).exists());
    assert!(out.join(&m.images[0].preview).exists());
}

#[test]
fn protocol_condition_counts_and_views() {
    let tmp = TempDir::new().unwrap();
    let (asset, _) = sphere(tmp.path(), 100);
    for (mode, conditions, active) in [("direction", 46, 5), ("random10", 24, 10), ("random20", 24, 20)] {
        let out = tmp.path().join(mode);
        gsr(&[
            "olat", "--asset", s(&asset), "--mode", mode, "--views", "2", "--width", "8", "--height", "8", "--out",
            s(&out),
        ]);
        let m = Manifest::from_json(&fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(m.conditions.len(), conditions, "{mode}");
        assert!(m.conditions.iter().all(|c| c.active.len() == active), "{mode}");
        assert_eq!(m.images.len(), 2 * conditions);
        assert_ne!(m.images[0].camera, m.images[1].camera);
    }
}

#[test]
fn sweep_of_constant_environment_gives_identical_frames() {
    let tmp = TempDir::new().unwrap();
    let (asset, _) = sphere(tmp.path(), 300);
    let out = tmp.path().join("sweep");
    let written = gsr(&[
        "sweep", "--asset", s(&asset), "--env-preset", "white", "--frames", "8", "--width", "32", "--height", "32",
        "--out", s(&out),
    ]);
    assert_eq!(written.len(), 16);
    let first = load_pfm(&out.join("sweep_000.pfm")).unwrap();
    assert!(first.rgb.iter().any(|p| p[0] > 0.05), "frame is lit");
    for k in 1..8 {
        let frame = load_pfm(&out.join(format!("sweep_{k:03}.pfm"))).unwrap();
        assert!(max_abs_diff(&first, &frame) <= 1e-6, "frame {k}");
    }
}

#[test]
fn sweep_of_directional_environment_changes_frames() {
    let tmp = TempDir::new().unwrap();
    let (asset, _) = sphere(tmp.path(), 300);
    let out = tmp.path().join("sweep");
    gsr(&[
        "sweep", "--asset", s(&asset), "--env-preset", "split", "--frames", "4", "--width", "32", "--height", "32",
        "--out", s(&out),
    ]);
    let a = load_pfm(&out.join("sweep_000.pfm")).unwrap();
    let b = load_pfm(&out.join("sweep_002.pfm")).unwrap();
    assert!(max_abs_diff(&a, &b) > 0.05);
}

#[test]
fn check_gradients_on_generated_sphere_exits_zero() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(exit_code(&["check-gradients", "--out", s(tmp.path())], None), EXIT_OK);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("gradcheck.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    let err = report["max_rel_error"].as_f64().unwrap();
    assert!(err < 1e-3, "{err}");
    assert!(report["checked"].as_u64().unwrap() > 1000);
}

#[test]
fn render_matches_library_render() {
    let tmp = TempDir::new().unwrap();
    let (asset_path, _) = sphere(tmp.path(), 400);
    let lights = tmp.path().join("lights.txt");
    fs::write(&lights, "# key and fill\n0 0 2 1 0.9 0.8\n-1 1 0.5 0.2 0.2 0.3\n").unwrap();
    gsr(&[
        "render", "--asset", s(&asset_path), "--lights", s(&lights), "--orbit", "30,-10", "--width", "40", "--height",
        "30", "--out", s(tmp.path()),
    ]);
    let asset = HeadAsset::load(&asset_path).unwrap();
    let orbit = Orbit {
        azimuth: 30.0,
        elevation: -10.0,
        ..Orbit::default()
    };
    let camera = Camera::orbit(&orbit, 40, 30).unwrap();
    let condition = LightCondition::PointSet(vec![
        PointLight::new(glam::DVec3::new(0.0, 0.0, 2.0), [1.0, 0.9, 0.8]).unwrap(),
        PointLight::new(glam::DVec3::new(-1.0, 1.0, 0.5), [0.2, 0.2, 0.3]).unwrap(),
    ]);
    let expected = render_with(&asset, &camera, &condition, &RenderOptions::default()).unwrap();
    let bytes = fs::read(tmp.path().join("render.pfm")).unwrap();
    assert_eq!(bytes, encode_pfm(&expected.to_linear()));
    assert!(tmp.path().join("render.png").exists());
}

#[test]
fn camera_file_round_trips_through_render() {
    let tmp = TempDir::new().unwrap();
    let (asset, _) = sphere(tmp.path(), 200);
    let orbit = Orbit {
        azimuth: 75.0,
        elevation: 20.0,
        ..Orbit::default()
    };
    let camera = Camera::orbit(&orbit, 24, 24).unwrap();
    let cam_path = tmp.path().join("cam.txt");
    fs::write(&cam_path, camera.to_text()).unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let base = ["render", "--asset", s(&asset), "--env-preset", "sky"];
    gsr(&[&base[..], &["--camera", s(&cam_path), "--out", s(&a)]].concat());
    gsr(&[&base[..], &["--orbit", "75,20", "--width", "24", "--height", "24", "--out", s(&b)]].concat());
    assert_eq!(fs::read(a.join("render.pfm")).unwrap(), fs::read(b.join("render.pfm")).unwrap());
}

#[test]
fn outputs_are_byte_identical_under_a_seed() {
    let tmp = TempDir::new().unwrap();
    let (asset, _) = sphere(tmp.path(), 300);
    let run_into = |dir: &str, seed: &str| {
        let out = tmp.path().join(dir);
        gsr(&[
            "render", "--asset", s(&asset), "--env-preset", "sunset", "--width", "32", "--height", "32", "--seed",
            seed, "--out", s(&out),
        ]);
        gsr(&[
            "olat", "--asset", s(&asset), "--mode", "random10", "--width", "8", "--height", "8", "--seed", seed,
            "--out", s(&out),
        ]);
        gsr(&["gen-asset", "--kind", "two-lobe", "--splats", "200", "--seed", seed, "--out", s(&out)]);
        out
    };
    let a = run_into("a", "7");
    let b = run_into("b", "7");
    let c = run_into("c", "8");
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 40);
    for name in &names {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name:?}");
    }
    assert_ne!(fs::read(a.join(MANIFEST_FILE)).unwrap(), fs::read(c.join(MANIFEST_FILE)).unwrap());
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let tmp = TempDir::new().unwrap();
    let (asset, _) = sphere(tmp.path(), 500);
    let render = |dir: &str, threads: &str| {
        let out = tmp.path().join(dir);
        let args = [
            "render", "--asset", s(&asset), "--env-preset", "studio", "--width", "48", "--height", "40", "--out",
            s(&out),
        ];
        assert_eq!(exit_code(&args, Some(threads)), EXIT_OK);
        fs::read(out.join("render.pfm")).unwrap()
    };
    assert_eq!(render("one", "1"), render("three", "3"));
}

#[test]
fn fit_consumes_manifest_and_writes_asset_and_loss_csv() {
    let tmp = TempDir::new().unwrap();
    let (asset, mesh) = sphere(tmp.path(), 150);
    let stack = tmp.path().join("stack");
    gsr(&[
        "olat", "--asset", s(&asset), "--mode", "random10", "--views", "2", "--width", "24", "--height", "24",
        "--out", s(&stack),
    ]);
    let out = tmp.path().join("fit");
    gsr(&[
        "fit", "--asset", s(&asset), "--manifest", s(&stack.join(MANIFEST_FILE)), "--mesh", s(&mesh),
        "--iterations", "5", "--batch-size", "8", "--out", s(&out),
    ]);
    let fitted = HeadAsset::load(&out.join("fitted.gsr")).unwrap();
    let original = HeadAsset::load(&asset).unwrap();
    assert_eq!(fitted.len(), original.len());
    for (a, b) in fitted.splats().iter().zip(original.splats()) {
        assert_eq!((a.position, a.rotation, a.scale, a.opacity), (b.position, b.rotation, b.scale, b.opacity));
    }
    let csv = fs::read_to_string(out.join("fitted_loss.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[0].starts_with("iteration,"));
    assert!(lines[0].ends_with(",total"));
}

#[test]
fn metrics_reports_identical_and_different_pairs() {
    let tmp = TempDir::new().unwrap();
    let (asset, _) = sphere(tmp.path(), 300);
    let base = ["render", "--asset", s(&asset), "--width", "32", "--height", "32", "--out", s(tmp.path())];
    gsr(&[&base[..], &["--env-preset", "sky", "--name", "a"]].concat());
    gsr(&[&base[..], &["--env-preset", "sunset", "--name", "b"]].concat());
    let (a, b) = (tmp.path().join("a.pfm"), tmp.path().join("b.pfm"));
    gsr(&["metrics", s(&a), s(&a), s(&a), s(&b), "--out", s(tmp.path())]);
    let csv = fs::read_to_string(tmp.path().join("metrics.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    let same_psnr: f64 = rows[0][2].parse().unwrap();
    let same_ssim: f64 = rows[0][3].parse().unwrap();
    let diff_psnr: f64 = rows[1][2].parse().unwrap();
    assert_eq!(same_psnr, 100.0);
    assert!((same_ssim - 1.0).abs() < 1e-12);
    assert!(diff_psnr < 40.0);
}

#[test]
fn bench_writes_a_row_per_configuration() {
    let tmp = TempDir::new().unwrap();
    gsr(&["bench", "--resolutions", "16,24", "--splats", "100", "--frames", "1", "--out", s(tmp.path())]);
    let csv = fs::read_to_string(tmp.path().join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(2).unwrap().starts_with("24,100,"));
}

#[test]
fn failure_classes_have_distinct_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let (asset, mesh) = sphere(dir, 100);
    let asset = s(&asset);
    let out = s(dir);
    let size = ["--width", "8", "--height", "8"];

    let usage = exit_code(&[&["render", "--asset", asset, "--out", out][..], &size].concat(), None);
    let usage_clap = exit_code(&["render", "--asset", asset, "--lights", "a", "--sh", "b"], None);
    let usage_threads = exit_code(&["gen-asset", "--out", out], Some("zero"));

    let missing = exit_code(&["render", "--asset", "does/not/exist.gsr", "--env-preset", "white", "--out", out], None);

    let bad_lights = dir.join("bad.txt");
    fs::write(&bad_lights, "0 0 1 1 1\n").unwrap();
    let malformed = exit_code(&["render", "--asset", asset, "--lights", s(&bad_lights), "--out", out], None);

    let skewed = dir.join("skewed.txt");
    fs::write(&skewed, "20 20 4 4 8 8\n1 0.5 0 0\n0 1 0 0\n0 0 1 4\n").unwrap();
    let invariant =
        exit_code(&["render", "--asset", asset, "--camera", s(&skewed), "--env-preset", "white", "--out", out], None);

    let validation = exit_code(&["check-gradients", "--splats", "20", "--tolerance", "1e-300", "--out", out], None);

    // a NaN pixel in a target image makes the first loss non-finite
    let stack = dir.join("stack");
    gsr(&[&["olat", "--asset", asset, "--mode", "uniform", "--out", s(&stack)][..], &size].concat());
    let m = Manifest::from_json(&fs::read_to_string(stack.join(MANIFEST_FILE)).unwrap()).unwrap();
    let target = stack.join(&m.images[0].image);
    let mut img = load_pfm(&target).unwrap();
    img.rgb[27] = [f32::NAN; 3];
    fs::write(&target, encode_pfm(&img)).unwrap();
    let divergence = exit_code(
        &[
            "fit", "--asset", asset, "--manifest", s(&stack.join(MANIFEST_FILE)), "--mesh", s(&mesh), "--iterations",
            "3", "--out", out,
        ],
        None,
    );

    assert_eq!(usage, EXIT_USAGE);
    assert_eq!(usage_clap, EXIT_USAGE);
    assert_eq!(usage_threads, EXIT_USAGE);
    assert_eq!(missing, EXIT_IO);
    assert_eq!(malformed, EXIT_MALFORMED);
    assert_eq!(invariant, EXIT_INVARIANT);
    assert_eq!(validation, EXIT_VALIDATION);
    assert_eq!(divergence, EXIT_DIVERGENCE);
    let mut codes = vec![EXIT_OK, usage, missing, malformed, invariant, validation, divergence];
    codes.sort();
    codes.dedup();
    assert_eq!(codes.len(), 7);
    // the failed gradient check still wrote its report
    assert!(dir.join("gradcheck.json").exists());
}

#[test]
fn fit_without_mesh_needs_normal_distillation_off() {
    let tmp = TempDir::new().unwrap();
    let (asset, _) = sphere(tmp.path(), 100);
    let stack = tmp.path().join("stack");
    gsr(&["olat", "--asset", s(&asset), "--mode", "uniform", "--width", "8", "--height", "8", "--out", s(&stack)]);
    let manifest = stack.join(MANIFEST_FILE);
    let base = ["fit", "--asset", s(&asset), "--manifest", s(&manifest), "--iterations", "2", "--out", s(tmp.path())];
    assert!(matches!(run(&cli(&base)), Err(gsr_cli::CliError::Usage(_))));
    gsr(&[&base[..], &["--weights", "normal_d=0"]].concat());
}

#[test]
fn weight_and_attribute_lists_parse() {
    use gsr_cli::commands::{parse_free, parse_weights};
    use gsrelight::fit::{FreeAttributes, LossWeights};
    assert_eq!(parse_weights("standard").unwrap(), LossWeights::STANDARD);
    let w = parse_weights("zero,img=1,prt=2.5").unwrap();
    assert_eq!(w, LossWeights { img: 1.0, prt: 2.5, ..LossWeights::ZERO });
    assert!(parse_weights("img=-1").is_err());
    assert!(parse_weights("perceptual=1").is_err());
    assert_eq!(parse_free("all").unwrap(), FreeAttributes::ALL);
    assert_eq!(parse_free("normal,roughness,transport").unwrap(), FreeAttributes::default());
    assert!(parse_free("geometry").is_err());
}
