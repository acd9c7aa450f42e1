use std::path::Path;
use std::process::{Command, Output};

use pgfwi_core::config::ExperimentConfig;
use pgfwi_core::data::{toy_two_layer, RawDescriptor, RawDtype, RawOrder};
use pgfwi_core::wavesim::{io, VelocityModel};
use serde_json::Value;

const TOY: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/toy.json");

fn pgfwi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pgfwi")).args(args).env_remove("PGFWI_THREADS").output().unwrap()
}

fn ok_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn err_json(out: &Output) -> Value {
    assert!(!out.status.success());
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(text.trim_end().lines().count(), 1, "{text}");
    serde_json::from_str(text.trim_end()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn toy_with(dir: &Path, edit: impl FnOnce(&mut ExperimentConfig)) -> std::path::PathBuf {
    let mut cfg = ExperimentConfig::load(Path::new(TOY)).unwrap();
    edit(&mut cfg);
    let path = dir.join("config.in.json");
    std::fs::write(&path, cfg.to_json()).unwrap();
    path
}

#[test]
fn metrics_of_identical_models() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.bin");
    io::save_model(&m, &toy_two_layer(32, 16, 0.01, (2000.0, 2500.0)).unwrap()).unwrap();
    let v = ok_json(&pgfwi(&["metrics", "--true", s(&m), "--inverted", s(&m)]));
    assert_eq!(v["ssim"], 1.0);
    assert_eq!(v["snr_db"], "inf");
}

#[test]
fn zero_epoch_inversion_keeps_the_initial_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_with(dir.path(), |c| c.gan.epochs = 0);
    let run = dir.path().join("run");
    ok_json(&pgfwi(&["gan-invert", "--config", s(&cfg), "--out", s(&run), "--threads", "1"]));
    let v_init = io::load_model(&run.join("v_init.bin")).unwrap();
    assert_eq!(io::load_model(&run.join("final/v_final.bin")).unwrap(), v_init);
    let saved = ExperimentConfig::load(&run.join("config.json")).unwrap();
    assert_eq!(saved.gan.epochs, 0);
    assert_eq!(saved.output_dir, run);
    assert_eq!(std::fs::read_to_string(run.join("metrics.csv")).unwrap().lines().count(), 1);
}

#[test]
fn errors_are_single_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let e = err_json(&pgfwi(&["make-init", "--config", s(&dir.path().join("missing.json"))]));
    assert_eq!(e["kind"], "io");
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"benchmark": {"preset": "toy"}, "colour": 3}"#).unwrap();
    assert_eq!(err_json(&pgfwi(&["make-init", "--config", s(&bad)]))["kind"], "json");
    assert_eq!(err_json(&pgfwi(&["fwi", "--loss", "hinge"]))["kind"], "usage");
    let out = pgfwi(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(err_json(&out)["kind"], "usage");
}

#[test]
fn render_maps_the_fixed_window() {
    let dir = tempfile::tempdir().unwrap();
    let mut vals = vec![2250.0; 64];
    vals[..4].copy_from_slice(&[2000.0, 2500.0, 1000.0, 9000.0]);
    let m = dir.path().join("m.bin");
    io::save_model(&m, &VelocityModel::new(8, 8, 0.01, vals).unwrap()).unwrap();
    let stem = dir.path().join("img/m");
    ok_json(&pgfwi(&["render", "--model", s(&m), "--output", s(&stem), "--vmin", "2000", "--vmax", "2500"]));
    let pgm = std::fs::read(stem.with_extension("pgm")).unwrap();
    let header = b"P5\n8 8\n255\n";
    assert_eq!(&pgm[..header.len()], header);
    // 2250 sits at 127.5 and rounds away from zero
    assert_eq!(&pgm[header.len()..header.len() + 5], &[0, 255, 0, 255, 128]);
    let csv = std::fs::read_to_string(stem.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().count(), 8);
    assert_eq!(csv.lines().next().unwrap(), "2000,2500,1000,9000,2250,2250,2250,2250");
}

#[test]
fn convert_imports_raw_grids() {
    let dir = tempfile::tempdir().unwrap();
    let fine = toy_two_layer(64, 32, 0.005, (2000.0, 2500.0)).unwrap();
    let raw = dir.path().join("raw.f64");
    let bytes: Vec<u8> = fine.v.iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(&raw, bytes).unwrap();
    let out = dir.path().join("toy.bin");
    let args = ["convert", "--input", s(&raw), "--output", s(&out), "--preset", "toy", "--nx", "64", "--nz", "32"];
    ok_json(&pgfwi(&[&args[..], &["--dtype", "f64", "--order", "x_fastest"]].concat()));
    assert_eq!(io::load_model(&out).unwrap(), toy_two_layer(32, 16, 0.01, (2000.0, 2500.0)).unwrap());

    // descriptor next to the file, z fastest, wrong preset range
    let desc = RawDescriptor { nx: 64, nz: 32, dtype: RawDtype::F64, order: RawOrder::ZFastest };
    io::write_json(&io::sidecar_path(&raw), &desc).unwrap();
    let e = err_json(&pgfwi(&["convert", "--input", s(&raw), "--output", s(&out), "--preset", "marmousi"]));
    assert_eq!(e["kind"], "shape");
}

#[test]
fn forward_then_noise_at_target_snr() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    ok_json(&pgfwi(&["forward", "--config", TOY, "--out", s(&run)]));
    ok_json(&pgfwi(&["add-noise", "--input", s(&run.join("observed.bin")), "--snr-db", "10", "--seed", "4", "--out", s(&run)]));
    let (clean, h) = io::load_gather(&run.join("observed.bin")).unwrap();
    let (noisy, _) = io::load_gather(&run.join("noisy.bin")).unwrap();
    assert_eq!((h.ns, h.nr, h.nt), (3, 32, 400));
    let sig: f64 = clean.traces.iter().map(|x| x * x).sum();
    let err: f64 = clean.traces.iter().zip(&noisy.traces).map(|(a, b)| (a - b).powi(2)).sum();
    assert!((10.0 * (sig / err).log10() - 10.0).abs() < 1e-9);
}

#[test]
fn baseline_fwi_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_with(dir.path(), |c| c.fwi.snapshot_every = 2);
    let run = dir.path().join("run");
    let v = ok_json(&pgfwi(&["fwi", "--config", s(&cfg), "--out", s(&run), "--iters", "4"]));
    assert_eq!(v["iterations"], 4);
    let csv = std::fs::read_to_string(run.join("misfit.csv")).unwrap();
    let e: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(e.len(), 4);
    assert!(e[3] < e[0]);
    assert!(run.join("snapshots/iter_2.bin").exists() && run.join("snapshots/iter_4.bin").exists());
    let fin = io::load_model(&run.join("v_final.bin")).unwrap();
    assert!(fin.vmin() >= 1800.0 && fin.vmax() <= 2700.0);
}
