//! `pgfwi`: forward modeling, baseline FWI and adversarial inversion runs
//! driven by one JSON experiment config.

mod commands;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pgfwi_core::gan::LossKind;

#[derive(Parser)]
#[command(name = "pgfwi", version, about = "Physics-driven adversarial full-waveform inversion")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Experiment config (JSON); defaults apply to every missing field.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` from the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for training and noise (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for per-shot parallelism.
    #[arg(long, global = true, env = "PGFWI_THREADS")]
    pub threads: Option<usize>,
    /// Adversarial loss (overrides the config).
    #[arg(long, global = true)]
    pub loss: Option<LossKind>,
}

#[derive(Subcommand)]
enum Command {
    /// Model observed data for the configured benchmark (or `--model`).
    Forward {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Write the true and initial models for the configured benchmark.
    MakeInit,
    /// Add white Gaussian noise to a gather at a target SNR.
    AddNoise {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        snr_db: f64,
    },
    /// Plain adjoint-state FWI from the configured initial model.
    Fwi {
        /// Iteration count (defaults to `fwi.n_iters`).
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Full adversarial inversion.
    GanInvert,
    /// SSIM and SNR of an inverted model against the true model.
    Metrics {
        #[arg(long = "true")]
        true_model: PathBuf,
        #[arg(long)]
        inverted: PathBuf,
    },
    /// 8-bit PGM image plus CSV grid of a model.
    Render {
        #[arg(long)]
        model: PathBuf,
        /// Output stem; writes `<stem>.pgm` and `<stem>.csv`.
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        vmin: Option<f64>,
        #[arg(long)]
        vmax: Option<f64>,
    },
    /// Import a raw grid onto a benchmark grid as a model file.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Benchmark preset (defaults to the config's).
        #[arg(long)]
        preset: Option<String>,
        /// Raw layout, when no `.json` descriptor sits next to the input.
        #[arg(long, requires_all = ["nz", "dtype", "order"])]
        nx: Option<usize>,
        #[arg(long)]
        nz: Option<usize>,
        #[arg(long)]
        dtype: Option<String>,
        #[arg(long)]
        order: Option<String>,
    },
}

/// A failure reported as one JSON line on stderr.
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
}

impl From<pgfwi_core::Error> for Failure {
    fn from(e: pgfwi_core::Error) -> Self {
        Failure { kind: e.kind(), message: e.to_string() }
    }
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { kind: "usage", message: message.into() }
    }
}

fn report(f: &Failure) {
    eprintln!("{}", serde_json::json!({ "error": f.message, "kind": f.kind }));
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(format!("--threads {n}: {e}")))?;
    }
    let g = &cli.global;
    match cli.command {
        Command::Forward { model } => commands::forward(g, model.as_deref()),
        Command::MakeInit => commands::make_init(g),
        Command::AddNoise { input, snr_db } => commands::add_noise(g, &input, snr_db),
        Command::Fwi { iters } => commands::fwi(g, iters),
        Command::GanInvert => commands::gan_invert(g),
        Command::Metrics { true_model, inverted } => commands::metrics(&true_model, &inverted),
        Command::Render { model, output, vmin, vmax } => commands::render(&model, &output, vmin, vmax),
        Command::Convert { input, output, preset, nx, nz, dtype, order } => {
            let layout = match (nx, nz, dtype, order) {
                (Some(nx), Some(nz), Some(dtype), Some(order)) => Some((nx, nz, dtype, order)),
                _ => None,
            };
            commands::convert(g, &input, &output, preset.as_deref(), layout)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            report(&Failure::usage(first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report(&f);
            ExitCode::from(1)
        }
    }
}
