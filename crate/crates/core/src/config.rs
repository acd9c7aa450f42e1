//! Experiment configuration: one JSON document describing a full run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{synthesize_observed, BenchmarkSpec};
use crate::error::{Error, Result};
use crate::fwi::{make_initial_gaussian, make_initial_linear, FwiConfig};
use crate::gan::GanConfig;
use crate::metrics::add_awgn;
use crate::wavesim::{AcquisitionGeometry, ShotGather, VelocityModel, DEFAULT_PML_WIDTH, DEFAULT_SPONGE_ALPHA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    /// `marmousi`, `overthrust` or `toy-two-layer`.
    pub preset: String,
    pub source_path: Option<PathBuf>,
    pub nx: Option<usize>,
    pub nz: Option<usize>,
    pub dx_km: Option<f64>,
    pub v_range: Option<(f64, f64)>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            preset: "toy-two-layer".into(),
            source_path: None,
            nx: None,
            nz: None,
            dx_km: None,
            v_range: None,
        }
    }
}

impl BenchmarkConfig {
    pub fn resolve(&self) -> Result<BenchmarkSpec> {
        let mut spec = BenchmarkSpec::preset(&self.preset)?;
        spec.nx = self.nx.unwrap_or(spec.nx);
        spec.nz = self.nz.unwrap_or(spec.nz);
        spec.dx_km = self.dx_km.unwrap_or(spec.dx_km);
        spec.v_range = self.v_range.unwrap_or(spec.v_range);
        spec.source_path = self.source_path.clone();
        Ok(spec)
    }
}

/// Acquisition settings; unset fields take benchmark-dependent defaults
/// (see [`GeometryConfig::resolve`]).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub n_sources: Option<usize>,
    pub receiver_step: Option<usize>,
    /// Source and receiver row.
    pub depth: Option<usize>,
    /// Ricker dominant frequency in Hz.
    pub f0: Option<f64>,
    pub dt: Option<f64>,
    pub duration_s: Option<f64>,
    pub pml_width: Option<usize>,
    pub sponge_alpha: Option<f64>,
}

impl GeometryConfig {
    /// Defaults: 10 shots, every surface cell a receiver, 5 Hz, dt = 1 ms,
    /// 2 s (2.5 s for overthrust). The toy uses 3 shots, 25 Hz and 0.4 s.
    pub fn resolve(&self, spec: &BenchmarkSpec) -> AcquisitionGeometry {
        let toy = spec.name == "toy-two-layer";
        let n_sources = self.n_sources.unwrap_or(if toy { 3 } else { 10 });
        let f0 = self.f0.unwrap_or(if toy { 25.0 } else { 5.0 });
        let dt = self.dt.unwrap_or(1e-3);
        let duration = self.duration_s.unwrap_or(match spec.name.as_str() {
            "overthrust" => 2.5,
            "toy-two-layer" => 0.4,
            _ => 2.0,
        });
        let nt = (duration / dt).round() as usize;
        let mut geom = AcquisitionGeometry::surface(
            spec.nx,
            n_sources,
            self.receiver_step.unwrap_or(1),
            self.depth.unwrap_or(0),
            dt,
            nt,
            f0,
        );
        geom.pml_width = self.pml_width.unwrap_or(DEFAULT_PML_WIDTH);
        geom.sponge_alpha = self.sponge_alpha.unwrap_or(DEFAULT_SPONGE_ALPHA);
        geom
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialModel {
    Gaussian { sigma: f64 },
    Linear { v_top: f64, v_bottom: f64 },
}

impl Default for InitialModel {
    fn default() -> Self {
        InitialModel::Gaussian { sigma: 5.0 }
    }
}

impl InitialModel {
    pub fn build(&self, v_true: &VelocityModel) -> Result<VelocityModel> {
        match *self {
            InitialModel::Gaussian { sigma } => make_initial_gaussian(v_true, sigma),
            InitialModel::Linear { v_top, v_bottom } => {
                make_initial_linear(v_top, v_bottom, v_true.nx, v_true.nz, v_true.dx_km)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    #[default]
    None,
    Awgn { snr_db: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub benchmark: BenchmarkConfig,
    pub geometry: GeometryConfig,
    pub initial_model: InitialModel,
    pub noise: NoiseConfig,
    pub gan: GanConfig,
    pub fwi: FwiConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            benchmark: BenchmarkConfig::default(),
            geometry: GeometryConfig::default(),
            initial_model: InitialModel::default(),
            noise: NoiseConfig::default(),
            gan: GanConfig::default(),
            fwi: FwiConfig::default(),
            output_dir: PathBuf::from("runs/default"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::json(path, e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Everything a run needs, derived deterministically from the config.
pub struct Prepared {
    pub spec: BenchmarkSpec,
    pub v_true: VelocityModel,
    pub v_init: VelocityModel,
    pub geometry: AcquisitionGeometry,
    /// Observed data (noise added when configured).
    pub d_obs: ShotGather,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let spec = cfg.benchmark.resolve()?;
    let v_true = spec.load()?;
    let geometry = cfg.geometry.resolve(&spec);
    let mut v_init = cfg.initial_model.build(&v_true)?;
    v_init.clamp(cfg.fwi.v_clip.0, cfg.fwi.v_clip.1);
    let clean = synthesize_observed(&v_true, &geometry)?;
    let d_obs = match cfg.noise {
        NoiseConfig::None => clean,
        NoiseConfig::Awgn { snr_db, seed } => add_awgn(&clean, snr_db, seed)?,
    };
    Ok(Prepared { spec, v_true, v_init, geometry, d_obs })
}
