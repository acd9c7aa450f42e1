//! Physics-driven adversarial inversion.
//!
//! The generator is a U-Net followed by FWI refinement and forward
//! modeling; the discriminator scores single-shot samples. Adversarial
//! gradients reach the physical model through the adjoint of the forward
//! operator, and the U-Net is periodically refit to the current model.
//!
//! Random draws come from one ChaCha8 stream seeded with `GanConfig::seed`,
//! consumed in this order: U-Net init seed, discriminator init seed, then
//! per epoch, for every discriminator step the batch draws followed (WGAN-GP
//! only) by one interpolation weight per sample, and finally the
//! generator-step batch draws.

mod loss;
mod samples;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pgfwi_tensor::{backward, checkpoint, zero_grads, AdamState, Tensor};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use loss::{
    disc_loss, gen_loss, gradient_penalty, vanilla_disc_loss, vanilla_gen_loss, Critic, LossKind, PROB_EPS,
};
pub use samples::{build_batch, draw_batch, sample_plane, sample_space, scatter_sample_grad, SampleDraw};

use crate::error::{Error, Result};
use crate::fwi::{fwi_refine_with, FwiConfig};
use crate::metrics::{snr, ssim};
use crate::nets::{fit_unet, pretrain_unet, Discriminator, DiscriminatorConfig, UNet, UNetConfig, Upsample};
use crate::wavesim::{self, data_gradient, forward_all, AcquisitionGeometry, ShotGather, VelocityModel};

/// U-Net settings that do not depend on the data (channels and output grid
/// come from the gather and model).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UNetArch {
    pub base_channels: usize,
    pub input_resample: (usize, usize),
    pub upsample: Upsample,
}

impl Default for UNetArch {
    fn default() -> Self {
        let d = UNetConfig::default();
        UNetArch { base_channels: d.base_channels, input_resample: d.input_resample, upsample: d.upsample }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Adam step size for both networks.
    pub lr: f64,
    pub d_steps_per_g: usize,
    pub loss_kind: LossKind,
    pub gp_lambda: f64,
    pub fwi_inner_iters: usize,
    pub distill_every: usize,
    pub distill_steps: usize,
    pub pretrain_epochs: usize,
    pub pretrain_lr: f64,
    /// Adam step size of the adversarial model update, in units of the
    /// normalized velocity `(v − v_min)/(v_max − v_min)`.
    pub adversarial_lr: f64,
    /// Largest trace-decimation factor used to augment the sample pool.
    pub max_decimation: usize,
    pub checkpoint_every: usize,
    pub seed: u64,
    pub unet: UNetArch,
    pub discriminator: DiscriminatorConfig,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            epochs: 300,
            batch_size: 15,
            lr: 1e-3,
            d_steps_per_g: 6,
            loss_kind: LossKind::WganGp,
            gp_lambda: 10.0,
            fwi_inner_iters: 10,
            distill_every: 25,
            distill_steps: 100,
            pretrain_epochs: 200,
            pretrain_lr: 1e-3,
            adversarial_lr: 1e-3,
            max_decimation: 3,
            checkpoint_every: 25,
            seed: 0,
            unet: UNetArch::default(),
            discriminator: DiscriminatorConfig::default(),
        }
    }
}

impl GanConfig {
    pub fn validate(&self, ns: usize) -> Result<()> {
        if self.d_steps_per_g == 0 {
            return Err(Error::Config("gan.d_steps_per_g must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("gan.batch_size must be at least 1".into()));
        }
        let pool = sample_space(ns, self.max_decimation).len();
        if self.batch_size > pool {
            return Err(Error::Config(format!(
                "gan.batch_size {} exceeds the {pool} distinct samples ({ns} shots, decimation up to {})",
                self.batch_size, self.max_decimation
            )));
        }
        for (name, v) in [("lr", self.lr), ("pretrain_lr", self.pretrain_lr), ("adversarial_lr", self.adversarial_lr)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("gan.{name} {v} must be finite and non-negative")));
            }
        }
        self.discriminator.validate()
    }

    pub fn unet_config(&self, ns: usize, model: &VelocityModel, v_range: (f64, f64)) -> UNetConfig {
        UNetConfig {
            in_channels: ns,
            base_channels: self.unet.base_channels,
            out_grid: (model.nx, model.nz),
            v_range,
            input_resample: self.unet.input_resample,
            upsample: self.unet.upsample,
        }
    }
}

/// The generator's learnable network plus the live physical model.
pub struct GeneratorState {
    pub unet: UNet,
    pub v_current: Option<VelocityModel>,
    pub fwi_adam: AdamState,
}

impl GeneratorState {
    pub fn new(unet: UNet, fwi_lr: f64) -> Self {
        GeneratorState { unet, v_current: None, fwi_adam: AdamState::new(fwi_lr) }
    }
}

/// U-Net prediction (first call only), `inner_iters` FWI refinements, then
/// forward modeling of the refined model.
pub fn generator_produce(
    state: &mut GeneratorState,
    d_obs: &ShotGather,
    geom: &AcquisitionGeometry,
    fwi: &FwiConfig,
    inner_iters: usize,
    dx_km: f64,
) -> Result<(VelocityModel, ShotGather)> {
    let v0 = match state.v_current.take() {
        Some(v) => v,
        None => {
            let mut v = state.unet.predict(d_obs, dx_km)?;
            v.clamp(fwi.v_clip.0, fwi.v_clip.1);
            v
        }
    };
    let cfg = FwiConfig { n_iters: inner_iters, ..fwi.clone() };
    let v_corr = fwi_refine_with(&v0, d_obs, geom, &cfg, &mut state.fwi_adam, |_, _, _| Ok(()))?.model;
    let d_syn = forward_all(&v_corr, geom)?;
    state.v_current = Some(v_corr.clone());
    Ok((v_corr, d_syn))
}

/// Global sample scale `1 / max|d_obs|` (1 for an all-zero gather).
pub fn sample_scale(d_obs: &ShotGather) -> f64 {
    let m = d_obs.max_abs();
    if m > 0.0 {
        1.0 / m
    } else {
        1.0
    }
}

/// Generator loss on the samples `draws` of `F(v)` and its gradient with
/// respect to every velocity cell.
pub fn adversarial_gradient(
    disc: &Discriminator,
    model: &VelocityModel,
    d_syn: &ShotGather,
    geom: &AcquisitionGeometry,
    draws: &[SampleDraw],
    scale: f64,
    kind: LossKind,
) -> Result<(f64, Vec<f64>)> {
    let size = disc.config.input_size;
    let fake = build_batch(d_syn, draws, size, scale, true)?;
    let loss = gen_loss(disc, &fake, kind)?;
    backward(&loss)?;
    zero_grads(&disc.tensors());
    let g = fake.grad().unwrap_or_else(|| vec![0.0; fake.numel()]);
    let mut weights = ShotGather::zeros(d_syn.ns, d_syn.nr, d_syn.nt);
    scatter_sample_grad(&g, draws, size, scale, &mut weights);
    let gv = data_gradient(model, geom, &weights)?;
    Ok((loss.item(), gv))
}

/// Generator loss value for `F(model)` on fixed draws (no gradients).
pub fn gen_loss_value(
    disc: &Discriminator,
    model: &VelocityModel,
    geom: &AcquisitionGeometry,
    draws: &[SampleDraw],
    scale: f64,
    kind: LossKind,
) -> Result<f64> {
    let d_syn = forward_all(model, geom)?;
    let fake = build_batch(&d_syn, draws, disc.config.input_size, scale, false)?;
    Ok(gen_loss(disc, &fake, kind)?.item())
}

pub struct TrainInputs<'a> {
    pub d_obs: &'a ShotGather,
    pub geom: &'a AcquisitionGeometry,
    pub v_init: &'a VelocityModel,
    /// Reference model for SSIM/SNR logging.
    pub v_true: Option<&'a VelocityModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub loss_d: f64,
    pub loss_g: f64,
    pub misfit: f64,
    pub ssim: Option<f64>,
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub epochs: usize,
    pub d_updates: usize,
    pub g_updates: usize,
    pub initial_misfit: f64,
    pub final_misfit: f64,
    pub initial_ssim: Option<f64>,
    pub final_ssim: Option<f64>,
    pub initial_snr_db: Option<f64>,
    pub final_snr_db: Option<f64>,
    pub pretrain_losses: Vec<f64>,
}

pub struct TrainOutcome {
    pub v_final: VelocityModel,
    pub rows: Vec<EpochRow>,
    pub summary: TrainSummary,
    /// `(epoch, d_steps, g_steps)` per completed epoch.
    pub audit: Vec<(usize, usize, usize)>,
}

pub const METRICS_HEADER: &str = "epoch,L_D,L_G,E,SSIM,SNR";

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

pub fn metrics_csv(rows: &[EpochRow]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.epoch,
            r.loss_d,
            r.loss_g,
            r.misfit,
            opt(r.ssim),
            opt(r.snr_db)
        );
    }
    out
}

struct RunDir(Option<PathBuf>);

impl RunDir {
    fn write(&self, rel: &str, text: &str) -> Result<()> {
        if let Some(root) = &self.0 {
            let path = root.join(rel);
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    fn model(&self, rel: &str, m: &VelocityModel) -> Result<()> {
        match &self.0 {
            Some(root) => wavesim::io::save_model(&root.join(rel), m),
            None => Ok(()),
        }
    }

    fn weights(&self, rel: &str, unet: &UNet, disc: &Discriminator) -> Result<()> {
        let Some(root) = &self.0 else { return Ok(()) };
        let path = root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut params: Vec<(String, Tensor)> =
            unet.params().into_iter().map(|(n, t)| (format!("unet.{n}"), t)).collect();
        params.extend(disc.params().into_iter().map(|(n, t)| (format!("disc.{n}"), t)));
        checkpoint::save(&path, &params)?;
        Ok(())
    }
}

fn model_metrics(v_true: Option<&VelocityModel>, v: &VelocityModel) -> Result<(Option<f64>, Option<f64>)> {
    match v_true {
        Some(t) => Ok((Some(ssim(t, v)?), Some(snr(t, v)?))),
        None => Ok((None, None)),
    }
}

fn half_sq(a: &ShotGather, b: &ShotGather) -> f64 {
    0.5 * a.traces.iter().zip(&b.traces).map(|(x, y)| (x - y).powi(2)).sum::<f64>()
}

/// Full adversarial training run. With `out_dir` set, writes `metrics.csv`,
/// `audit.log`, `summary.json`, `checkpoints/`, `models/` and `final/`.
pub fn train(cfg: &GanConfig, fwi: &FwiConfig, inputs: &TrainInputs, out_dir: Option<&Path>) -> Result<TrainOutcome> {
    let TrainInputs { d_obs, geom, v_init, v_true } = *inputs;
    let ns = geom.ns();
    cfg.validate(ns)?;
    fwi.validate()?;
    if (d_obs.ns, d_obs.nr, d_obs.nt) != (ns, geom.nr(), geom.nt) {
        return Err(Error::Shape(format!(
            "observed gather ({}, {}, {}) does not match geometry ({ns}, {}, {})",
            d_obs.ns,
            d_obs.nr,
            d_obs.nt,
            geom.nr(),
            geom.nt
        )));
    }
    let run = RunDir(out_dir.map(Path::to_path_buf));
    let (lo, hi) = fwi.v_clip;

    let d_init = forward_all(v_init, geom)?;
    let initial_misfit = half_sq(&d_init, d_obs);
    let (initial_ssim, initial_snr_db) = model_metrics(v_true, v_init)?;
    let mut summary = TrainSummary {
        epochs: cfg.epochs,
        d_updates: 0,
        g_updates: 0,
        initial_misfit,
        final_misfit: initial_misfit,
        initial_ssim,
        final_ssim: initial_ssim,
        initial_snr_db,
        final_snr_db: initial_snr_db,
        pretrain_losses: Vec::new(),
    };

    if cfg.epochs == 0 {
        run.write("metrics.csv", &metrics_csv(&[]))?;
        run.write("audit.log", "")?;
        run.model("final/v_final.bin", v_init)?;
        run.write("summary.json", &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
        return Ok(TrainOutcome { v_final: v_init.clone(), rows: Vec::new(), summary, audit: Vec::new() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let unet = UNet::new(cfg.unet_config(ns, v_init, fwi.v_clip), rng.next_u64())?;
    let disc = Discriminator::new(cfg.discriminator.clone(), rng.next_u64())?;

    summary.pretrain_losses = pretrain_unet(&unet, d_obs, v_init, cfg.pretrain_epochs, cfg.pretrain_lr)?.losses;

    let mut gen = GeneratorState::new(unet, fwi.lr);
    let mut v = gen.unet.predict(d_obs, v_init.dx_km)?;
    v.clamp(lo, hi);
    let mut d_syn = forward_all(&v, geom)?;

    let space = sample_space(ns, cfg.max_decimation);
    let size = cfg.discriminator.input_size;
    let scale = sample_scale(d_obs);
    let mut disc_adam = AdamState::new(cfg.lr);
    let mut adv_adam = AdamState::new(cfg.adversarial_lr);
    let mut unet_adam = AdamState::new(cfg.lr);
    let disc_params = disc.tensors();
    let inner = FwiConfig { n_iters: cfg.fwi_inner_iters, ..fwi.clone() };

    let mut rows = Vec::with_capacity(cfg.epochs);
    let mut audit = Vec::with_capacity(cfg.epochs);
    let mut audit_log = String::new();
    let mut csv = format!("{METRICS_HEADER}\n");

    for epoch in 1..=cfg.epochs {
        let mut d_steps = 0;
        let mut loss_d_sum = 0.0;
        for _ in 0..cfg.d_steps_per_g {
            let draws = draw_batch(&mut rng, &space, cfg.batch_size);
            let eps: Vec<f64> = match cfg.loss_kind {
                LossKind::WganGp => (0..cfg.batch_size).map(|_| rng.random::<f64>()).collect(),
                LossKind::Vanilla => Vec::new(),
            };
            let real = build_batch(d_obs, &draws, size, scale, false)?;
            let fake = build_batch(&d_syn, &draws, size, scale, false)?;
            let loss = disc_loss(&disc, &real, &fake, cfg.loss_kind, cfg.gp_lambda, &eps)?;
            let value = loss.item();
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss { what: "discriminator loss", epoch });
            }
            backward(&loss)?;
            disc_adam.step(&disc_params)?;
            loss_d_sum += value;
            d_steps += 1;
        }

        let draws = draw_batch(&mut rng, &space, cfg.batch_size);
        let (loss_g, gv) = adversarial_gradient(&disc, &v, &d_syn, geom, &draws, scale, cfg.loss_kind)?;
        if !loss_g.is_finite() {
            return Err(Error::NonFiniteLoss { what: "generator loss", epoch });
        }
        let mut u: Vec<f64> = v.v.iter().map(|x| (x - lo) / (hi - lo)).collect();
        let gu: Vec<f64> = gv.iter().map(|g| g * (hi - lo)).collect();
        adv_adam.step_slices(&mut [u.as_mut_slice()], &[gu.as_slice()]);
        v.v = u.iter().map(|x| lo + (hi - lo) * x).collect();
        v.clamp(lo, hi);
        let g_steps = 1;

        v = fwi_refine_with(&v, d_obs, geom, &inner, &mut gen.fwi_adam, |_, _, _| Ok(()))?.model;
        gen.v_current = Some(v.clone());
        d_syn = forward_all(&v, geom)?;
        let misfit = half_sq(&d_syn, d_obs);
        if misfit.is_nan() {
            return Err(Error::NanMisfit(epoch));
        }

        if cfg.distill_every > 0 && epoch % cfg.distill_every == 0 && cfg.distill_steps > 0 {
            fit_unet(&gen.unet, d_obs, &v, cfg.distill_steps, &mut unet_adam, false)?;
        }

        summary.d_updates += d_steps;
        summary.g_updates += g_steps;
        audit.push((epoch, d_steps, g_steps));
        let _ = writeln!(audit_log, "epoch {epoch}: d_steps={d_steps} g_steps={g_steps}");

        let (s, n) = model_metrics(v_true, &v)?;
        let row = EpochRow { epoch, loss_d: loss_d_sum / d_steps as f64, loss_g, misfit, ssim: s, snr_db: n };
        csv.push_str(metrics_csv(std::slice::from_ref(&row)).lines().nth(1).unwrap_or(""));
        csv.push('\n');
        rows.push(row);
        run.write("metrics.csv", &csv)?;
        run.write("audit.log", &audit_log)?;

        if epoch == cfg.epochs || (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
            run.weights(&format!("checkpoints/epoch_{epoch}.wgt1"), &gen.unet, &disc)?;
            run.model(&format!("models/epoch_{epoch}.bin"), &v)?;
        }
        summary.final_misfit = misfit;
        summary.final_ssim = s;
        summary.final_snr_db = n;
    }

    run.model("final/v_final.bin", &v)?;
    run.write("summary.json", &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    Ok(TrainOutcome { v_final: v, rows, summary, audit })
}
