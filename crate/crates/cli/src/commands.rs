//! One function per subcommand. Every command that produces a run directory
//! writes the effective `config.json` into it first.

use std::fs;
use std::path::{Path, PathBuf};

use pgfwi_core::config::{prepare, ExperimentConfig, Prepared};
use pgfwi_core::data::{prepare_model, BenchmarkSpec, RawDescriptor, RawGrid};
use pgfwi_core::fwi::{fwi_refine_with, write_misfit_csv, FwiConfig};
use pgfwi_core::gan::{train, TrainInputs};
use pgfwi_core::metrics::{add_awgn, MetricReport};
use pgfwi_core::wavesim::{forward_all, io, VelocityModel};
use pgfwi_core::Error;
use pgfwi_tensor::AdamState;
use serde_json::{json, Value};

use crate::render;
use crate::{Failure, GlobalOpts};

type Outcome = Result<(), Failure>;

/// Config from `--config` (or all defaults) with command-line overrides applied.
pub fn load_config(g: &GlobalOpts) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &g.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.gan.seed = seed;
    }
    if let Some(loss) = g.loss {
        cfg.gan.loss_kind = loss;
    }
    if let Some(out) = &g.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn out_dir(g: &GlobalOpts) -> Result<PathBuf, Failure> {
    Ok(match &g.out {
        Some(out) => out.clone(),
        None => load_config(g)?.output_dir,
    })
}

fn create_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| Failure { kind: "io", message: format!("{}: {e}", dir.display()) })
}

fn write_text(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure { kind: "io", message: format!("{}: {e}", path.display()) })
}

fn start_run(cfg: &ExperimentConfig) -> Result<Prepared, Failure> {
    create_dir(&cfg.output_dir)?;
    write_text(&cfg.output_dir.join("config.json"), &cfg.to_json())?;
    Ok(prepare(cfg)?)
}

fn print(value: Value) {
    println!("{value}");
}

fn report_value(v_true: &VelocityModel, v: &VelocityModel) -> Result<Value, Failure> {
    let r = MetricReport::compute(v_true, v)?;
    Ok(serde_json::from_str(&r.to_json()).expect("report is valid JSON"))
}

pub fn forward(g: &GlobalOpts, model: Option<&Path>) -> Outcome {
    let cfg = load_config(g)?;
    let out = cfg.output_dir.clone();
    create_dir(&out)?;
    let spec = cfg.benchmark.resolve()?;
    let v = match model {
        Some(path) => io::load_model(path)?,
        None => {
            let v = spec.load()?;
            io::save_model(&out.join("v_true.bin"), &v)?;
            v
        }
    };
    let grid = BenchmarkSpec { nx: v.nx, nz: v.nz, dx_km: v.dx_km, ..spec };
    let geom = cfg.geometry.resolve(&grid);
    let gather = forward_all(&v, &geom)?;
    let path = out.join("observed.bin");
    io::save_gather(&path, &gather, &geom, model.is_none())?;
    print(json!({ "gather": path, "ns": gather.ns, "nr": gather.nr, "nt": gather.nt }));
    Ok(())
}

pub fn make_init(g: &GlobalOpts) -> Outcome {
    let cfg = load_config(g)?;
    create_dir(&cfg.output_dir)?;
    let v_true = cfg.benchmark.resolve()?.load()?;
    let mut v_init = cfg.initial_model.build(&v_true)?;
    v_init.clamp(cfg.fwi.v_clip.0, cfg.fwi.v_clip.1);
    io::save_model(&cfg.output_dir.join("v_true.bin"), &v_true)?;
    let path = cfg.output_dir.join("v_init.bin");
    io::save_model(&path, &v_init)?;
    print(json!({ "v_init": path, "metrics": report_value(&v_true, &v_init)? }));
    Ok(())
}

pub fn add_noise(g: &GlobalOpts, input: &Path, snr_db: f64) -> Outcome {
    let out = out_dir(g)?;
    create_dir(&out)?;
    let (gather, header) = io::load_gather(input)?;
    let noisy = add_awgn(&gather, snr_db, g.seed.unwrap_or(0))?;
    let path = out.join("noisy.bin");
    io::save_gather(&path, &noisy, &header.geometry, header.observed)?;
    print(json!({ "gather": path, "snr_db": snr_db }));
    Ok(())
}

pub fn fwi(g: &GlobalOpts, iters: Option<usize>) -> Outcome {
    let cfg = load_config(g)?;
    let p = start_run(&cfg)?;
    let out = &cfg.output_dir;
    io::save_model(&out.join("v_true.bin"), &p.v_true)?;
    io::save_model(&out.join("v_init.bin"), &p.v_init)?;
    let fcfg = FwiConfig { n_iters: iters.unwrap_or(cfg.fwi.n_iters), ..cfg.fwi.clone() };
    let every = fcfg.snapshot_every;
    let mut adam = AdamState::new(fcfg.lr);
    let run = fwi_refine_with(&p.v_init, &p.d_obs, &p.geometry, &fcfg, &mut adam, |it, model, _| {
        if every > 0 && (it + 1) % every == 0 {
            io::save_model(&out.join(format!("snapshots/iter_{}.bin", it + 1)), model)?;
        }
        Ok::<(), Error>(())
    })?;
    write_misfit_csv(&out.join("misfit.csv"), &run.history)?;
    io::save_model(&out.join("v_final.bin"), &run.model)?;
    let metrics = json!({
        "initial": report_value(&p.v_true, &p.v_init)?,
        "final": report_value(&p.v_true, &run.model)?,
        "iterations": fcfg.n_iters,
    });
    write_text(&out.join("metrics.json"), &metrics.to_string())?;
    print(metrics);
    Ok(())
}

pub fn gan_invert(g: &GlobalOpts) -> Outcome {
    let cfg = load_config(g)?;
    let p = start_run(&cfg)?;
    let out = &cfg.output_dir;
    io::save_model(&out.join("v_true.bin"), &p.v_true)?;
    io::save_model(&out.join("v_init.bin"), &p.v_init)?;
    let inputs = TrainInputs { d_obs: &p.d_obs, geom: &p.geometry, v_init: &p.v_init, v_true: Some(&p.v_true) };
    let outcome = train(&cfg.gan, &cfg.fwi, &inputs, Some(out))?;
    let metrics = json!({
        "initial": report_value(&p.v_true, &p.v_init)?,
        "final": report_value(&p.v_true, &outcome.v_final)?,
        "epochs": cfg.gan.epochs,
    });
    write_text(&out.join("metrics.json"), &metrics.to_string())?;
    print(metrics);
    Ok(())
}

pub fn metrics(true_model: &Path, inverted: &Path) -> Outcome {
    let t = io::load_model(true_model)?;
    let v = io::load_model(inverted)?;
    println!("{}", MetricReport::compute(&t, &v)?.to_json());
    Ok(())
}

pub fn render(model: &Path, output: &Path, vmin: Option<f64>, vmax: Option<f64>) -> Outcome {
    let m = io::load_model(model)?;
    let (lo, hi) = (vmin.unwrap_or(m.vmin()), vmax.unwrap_or(m.vmax()));
    if !(lo < hi) {
        return Err(Failure::usage(format!("render window [{lo}, {hi}] is empty")));
    }
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let stem = output.with_extension("");
    fs::write(stem.with_extension("pgm"), render::pgm(&m, lo, hi))
        .map_err(|e| Failure { kind: "io", message: format!("{}: {e}", stem.display()) })?;
    write_text(&stem.with_extension("csv"), &render::csv(&m))?;
    print(json!({ "pgm": stem.with_extension("pgm"), "csv": stem.with_extension("csv"), "vmin": lo, "vmax": hi }));
    Ok(())
}

pub fn convert(
    g: &GlobalOpts,
    input: &Path,
    output: &Path,
    preset: Option<&str>,
    layout: Option<(usize, usize, String, String)>,
) -> Outcome {
    let spec = match preset {
        Some(name) => BenchmarkSpec::preset(name)?,
        None => load_config(g)?.benchmark.resolve()?,
    };
    let raw = match layout {
        Some((nx, nz, dtype, order)) => {
            let desc: RawDescriptor = serde_json::from_value(json!({ "nx": nx, "nz": nz, "dtype": dtype, "order": order }))
                .map_err(|e| Failure::usage(format!("raw layout: {e}")))?;
            RawGrid::read_with(input, &desc)?
        }
        None => RawGrid::read(input)?,
    };
    let model = prepare_model(&spec, &raw)?;
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    io::save_model(output, &model)?;
    print(json!({ "model": output, "nx": model.nx, "nz": model.nz, "vmin": model.vmin(), "vmax": model.vmax() }));
    Ok(())
}
