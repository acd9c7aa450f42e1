//! U-Net velocity predictor and CNN discriminator.

use pgfwi_tensor::{bilinear_resample, AdamState, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavesim::{ShotGather, VelocityModel};

/// U-Net depth (encoder blocks).
pub const UNET_LEVELS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Upsample {
    TransposedConv,
    Bilinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UNetConfig {
    /// Number of shots, used as input channels.
    pub in_channels: usize,
    pub base_channels: usize,
    /// Model grid `(nx, nz)`.
    pub out_grid: (usize, usize),
    pub v_range: (f64, f64),
    /// `(receivers, time)` size each shot gather is resampled to.
    pub input_resample: (usize, usize),
    pub upsample: Upsample,
}

impl Default for UNetConfig {
    fn default() -> Self {
        UNetConfig {
            in_channels: 10,
            base_channels: 32,
            out_grid: (191, 51),
            v_range: (1472.0, 5772.0),
            input_resample: (64, 64),
            upsample: Upsample::TransposedConv,
        }
    }
}

impl UNetConfig {
    pub fn validate(&self) -> Result<()> {
        let m = 1 << UNET_LEVELS;
        let (h, w) = self.input_resample;
        if h == 0 || w == 0 || h % m != 0 || w % m != 0 {
            return Err(Error::Config(format!("unet.input_resample ({h}, {w}) must be positive multiples of {m}")));
        }
        if self.in_channels == 0 || self.base_channels == 0 {
            return Err(Error::Config("unet channel counts must be positive".into()));
        }
        if !(self.v_range.0 < self.v_range.1) {
            return Err(Error::Config(format!("unet.v_range {:?} must be increasing", self.v_range)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscriminatorConfig {
    pub in_channels: usize,
    pub base_channels: usize,
    pub n_blocks: usize,
    pub fc_hidden: usize,
    pub leaky_slope: f64,
    /// `(receivers, time)` size of every sample.
    pub input_size: (usize, usize),
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        DiscriminatorConfig {
            in_channels: 1,
            base_channels: 32,
            n_blocks: 6,
            fc_hidden: 2000,
            leaky_slope: 0.1,
            input_size: (64, 64),
        }
    }
}

impl DiscriminatorConfig {
    pub fn validate(&self) -> Result<()> {
        let m = 1usize << self.n_blocks;
        let (h, w) = self.input_size;
        if h == 0 || w == 0 || h % m != 0 || w % m != 0 {
            return Err(Error::Config(format!(
                "discriminator.input_size ({h}, {w}) must be positive multiples of 2^{} = {m}",
                self.n_blocks
            )));
        }
        if self.n_blocks == 0 || self.base_channels == 0 || self.fc_hidden == 0 || self.in_channels == 0 {
            return Err(Error::Config("discriminator sizes must be positive".into()));
        }
        Ok(())
    }

    /// Output channels of each conv block: base, 2·base, 4·base, …
    pub fn widths(&self) -> Vec<usize> {
        (0..self.n_blocks).map(|i| self.base_channels << i).collect()
    }
}

/// He-uniform weights `U(−√(6/fan_in), √(6/fan_in))`.
fn he_uniform(rng: &mut ChaCha8Rng, shape: &[usize], fan_in: usize) -> Tensor {
    let bound = (6.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-bound..bound)).collect();
    Tensor::param(shape, data).expect("shape matches data")
}

fn zero_param(shape: &[usize]) -> Tensor {
    Tensor::param(shape, vec![0.0; shape.iter().product()]).expect("shape matches data")
}

/// Convolution layer with bias; `transposed` kernels are `(C_in, C_out, k, k)`.
#[derive(Clone)]
struct Conv {
    w: Tensor,
    b: Tensor,
    pad: usize,
    stride: usize,
    transposed: bool,
}

impl Conv {
    fn new(rng: &mut ChaCha8Rng, cin: usize, cout: usize, k: usize) -> Self {
        Conv { w: he_uniform(rng, &[cout, cin, k, k], cin * k * k), b: zero_param(&[cout]), pad: k / 2, stride: 1, transposed: false }
    }

    /// 2×2 stride-2 transposed convolution (doubles the spatial size).
    fn up(rng: &mut ChaCha8Rng, cin: usize, cout: usize) -> Self {
        Conv { w: he_uniform(rng, &[cin, cout, 2, 2], cout * 4), b: zero_param(&[cout]), pad: 0, stride: 2, transposed: true }
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(if self.transposed {
            x.conv_transpose2d(&self.w, Some(&self.b), self.stride, self.pad)?
        } else {
            x.conv2d(&self.w, Some(&self.b), self.stride, self.pad)?
        })
    }

    fn push_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        out.push((format!("{prefix}.weight"), self.w.clone()));
        out.push((format!("{prefix}.bias"), self.b.clone()));
    }
}

#[derive(Clone)]
struct Dense {
    w: Tensor,
    b: Tensor,
}

impl Dense {
    fn new(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Self {
        Dense { w: he_uniform(rng, &[fan_out, fan_in], fan_in), b: zero_param(&[fan_out]) }
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(x.linear(&self.w, Some(&self.b))?)
    }

    fn push_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        out.push((format!("{prefix}.weight"), self.w.clone()));
        out.push((format!("{prefix}.bias"), self.b.clone()));
    }
}

/// Two 3×3 conv + ReLU layers.
#[derive(Clone)]
struct DoubleConv(Conv, Conv);

impl DoubleConv {
    fn new(rng: &mut ChaCha8Rng, cin: usize, cout: usize) -> Self {
        DoubleConv(Conv::new(rng, cin, cout, 3), Conv::new(rng, cout, cout, 3))
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let h = self.0.forward(x)?.relu();
        Ok(self.1.forward(&h)?.relu())
    }

    fn push_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        self.0.push_params(&format!("{prefix}.conv1"), out);
        self.1.push_params(&format!("{prefix}.conv2"), out);
    }
}

/// Four-level U-Net mapping stacked shot gathers to a velocity model.
#[derive(Clone)]
pub struct UNet {
    pub config: UNetConfig,
    encoder: Vec<DoubleConv>,
    center: DoubleConv,
    /// Transposed-conv upsamplers (empty for bilinear upsampling).
    up: Vec<Conv>,
    decoder: Vec<DoubleConv>,
    head: Conv,
}

impl UNet {
    pub fn new(config: UNetConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = config.base_channels;
        let widths: Vec<usize> = (0..UNET_LEVELS).map(|i| b << i).collect();
        let mut encoder = Vec::new();
        let mut cin = config.in_channels;
        for &w in &widths {
            encoder.push(DoubleConv::new(&mut rng, cin, w));
            cin = w;
        }
        let center_w = b << UNET_LEVELS;
        let center = DoubleConv::new(&mut rng, cin, center_w);
        let (mut up, mut decoder) = (Vec::new(), Vec::new());
        let mut below = center_w;
        for &w in widths.iter().rev() {
            let merged = match config.upsample {
                Upsample::TransposedConv => {
                    up.push(Conv::up(&mut rng, below, w));
                    2 * w
                }
                Upsample::Bilinear => below + w,
            };
            decoder.push(DoubleConv::new(&mut rng, merged, w));
            below = w;
        }
        let head = Conv::new(&mut rng, b, 1, 1);
        Ok(UNet { config, encoder, center, up, decoder, head })
    }

    /// Named parameters in a fixed order.
    pub fn params(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        for (i, e) in self.encoder.iter().enumerate() {
            e.push_params(&format!("enc{i}"), &mut out);
        }
        self.center.push_params("center", &mut out);
        for (i, u) in self.up.iter().enumerate() {
            u.push_params(&format!("up{i}"), &mut out);
        }
        for (i, d) in self.decoder.iter().enumerate() {
            d.push_params(&format!("dec{i}"), &mut out);
        }
        self.head.push_params("head", &mut out);
        out
    }

    pub fn tensors(&self) -> Vec<Tensor> {
        self.params().into_iter().map(|(_, t)| t).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|(_, t)| t.numel()).sum()
    }

    /// Resample every shot to `input_resample` and normalize each channel to
    /// zero mean and unit standard deviation. Returns `(1, ns, h, w)`.
    pub fn prepare_input(&self, d: &ShotGather) -> Result<Tensor> {
        if d.ns != self.config.in_channels {
            return Err(Error::Shape(format!(
                "unet expects {} shots as channels, gather has {}",
                self.config.in_channels, d.ns
            )));
        }
        let (h, w) = self.config.input_resample;
        let mut data = Vec::with_capacity(d.ns * h * w);
        for s in 0..d.ns {
            let mut plane = bilinear_resample(d.shot(s), d.nr, d.nt, h, w);
            let mean = plane.iter().sum::<f64>() / plane.len() as f64;
            let var = plane.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / plane.len() as f64;
            let inv = if var > 0.0 { 1.0 / var.sqrt() } else { 1.0 };
            plane.iter_mut().for_each(|x| *x = (*x - mean) * inv);
            data.extend(plane);
        }
        Ok(Tensor::from_vec(&[1, d.ns, h, w], data)?)
    }

    /// Prediction in `[0, 1]`, shape `(nz, nx)`; velocity is
    /// `v_min + (v_max − v_min)·output`.
    pub fn forward_normalized(&self, input: &Tensor) -> Result<Tensor> {
        let mut skips = Vec::with_capacity(UNET_LEVELS);
        let mut x = input.clone();
        for block in &self.encoder {
            let h = block.forward(&x)?;
            x = h.maxpool2d()?;
            skips.push(h);
        }
        x = self.center.forward(&x)?;
        for (level, block) in self.decoder.iter().enumerate() {
            let skip = &skips[UNET_LEVELS - 1 - level];
            let up = match self.config.upsample {
                Upsample::TransposedConv => self.up[level].forward(&x)?,
                Upsample::Bilinear => {
                    let s = skip.shape();
                    x.bilinear_resize(s[2], s[3])?
                }
            };
            x = block.forward(&Tensor::concat(&[up, skip.clone()], 1)?)?;
        }
        let y = self.head.forward(&x)?.sigmoid();
        let (nx, nz) = self.config.out_grid;
        Ok(y.bilinear_resize(nz, nx)?.reshape(&[nz, nx])?)
    }

    /// Velocity prediction as a graph tensor `(nz, nx)` in m/s.
    pub fn forward_velocity(&self, input: &Tensor) -> Result<Tensor> {
        let (lo, hi) = self.config.v_range;
        Ok(self.forward_normalized(input)?.scalar_mul(hi - lo).add_scalar(lo))
    }

    /// Run on a gather and return a plain velocity model.
    pub fn predict(&self, d: &ShotGather, dx_km: f64) -> Result<VelocityModel> {
        let input = self.prepare_input(d)?;
        let v = self.forward_velocity(&input)?.to_vec();
        let (nx, nz) = self.config.out_grid;
        VelocityModel::new(nx, nz, dx_km, v)
    }
}

/// CNN critic: `n_blocks × (conv3×3 → leaky ReLU → maxpool)`, then
/// `FC(fc_hidden) → leaky ReLU → FC(1)`. Outputs raw scores.
#[derive(Clone)]
pub struct Discriminator {
    pub config: DiscriminatorConfig,
    blocks: Vec<Conv>,
    fc1: Dense,
    fc2: Dense,
}

impl Discriminator {
    pub fn new(config: DiscriminatorConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut blocks = Vec::new();
        let mut cin = config.in_channels;
        for w in config.widths() {
            blocks.push(Conv::new(&mut rng, cin, w, 3));
            cin = w;
        }
        let (h, w) = config.input_size;
        let flat = cin * (h >> config.n_blocks) * (w >> config.n_blocks);
        let fc1 = Dense::new(&mut rng, flat, config.fc_hidden);
        let fc2 = Dense::new(&mut rng, config.fc_hidden, 1);
        Ok(Discriminator { config, blocks, fc1, fc2 })
    }

    pub fn params(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            b.push_params(&format!("block{i}"), &mut out);
        }
        self.fc1.push_params("fc1", &mut out);
        self.fc2.push_params("fc2", &mut out);
        out
    }

    pub fn tensors(&self) -> Vec<Tensor> {
        self.params().into_iter().map(|(_, t)| t).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|(_, t)| t.numel()).sum()
    }

    /// Output channels of each conv block.
    pub fn block_widths(&self) -> Vec<usize> {
        self.blocks.iter().map(|c| c.w.shape()[0]).collect()
    }

    /// Scores for a `(B, C, H, W)` batch, shape `(B, 1)`.
    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        let slope = self.config.leaky_slope;
        let mut x = batch.clone();
        for b in &self.blocks {
            x = b.forward(&x)?.leaky_relu(slope).maxpool2d()?;
        }
        let h = self.fc1.forward(&x.flatten()?)?.leaky_relu(slope);
        self.fc2.forward(&h)
    }
}

/// Pretraining outcome: per-epoch loss (normalized-velocity MSE).
#[derive(Debug, Clone)]
pub struct PretrainReport {
    pub losses: Vec<f64>,
    /// True when the plateau rule ended training before the epoch budget.
    pub converged_early: bool,
}

/// Plateau window and threshold for stopping pretraining.
pub const PLATEAU_EPOCHS: usize = 20;
pub const PLATEAU_REL_IMPROVEMENT: f64 = 1e-5;

/// Fit the U-Net to `target` with an L2 loss on velocities scaled to `[0, 1]`.
pub fn pretrain_unet(net: &UNet, d_obs: &ShotGather, target: &VelocityModel, epochs: usize, lr: f64) -> Result<PretrainReport> {
    let mut adam = AdamState::new(lr);
    fit_unet(net, d_obs, target, epochs, &mut adam, true)
}

/// Shared L2 fitting loop; `plateau_stop` enables the convergence rule.
pub fn fit_unet(
    net: &UNet,
    d_obs: &ShotGather,
    target: &VelocityModel,
    epochs: usize,
    adam: &mut AdamState,
    plateau_stop: bool,
) -> Result<PretrainReport> {
    let (nx, nz) = net.config.out_grid;
    if (target.nx, target.nz) != (nx, nz) {
        return Err(Error::Shape(format!(
            "target model {}x{} does not match unet output {nx}x{nz}",
            target.nx, target.nz
        )));
    }
    let (lo, hi) = net.config.v_range;
    let scaled: Vec<f64> = target.v.iter().map(|v| (v - lo) / (hi - lo)).collect();
    let target_t = Tensor::from_vec(&[nz, nx], scaled)?;
    let input = net.prepare_input(d_obs)?;
    let params = net.tensors();
    let mut losses = Vec::with_capacity(epochs);
    let mut converged_early = false;
    for epoch in 0..epochs {
        let loss = net.forward_normalized(&input)?.sub(&target_t)?.square().mean();
        let value = loss.item();
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss { what: "pretraining loss", epoch });
        }
        if let Some(&first) = losses.first() {
            if value > 10.0 * first {
                return Err(Error::Divergence { epoch, loss: value, initial: first });
            }
        }
        losses.push(value);
        pgfwi_tensor::backward(&loss)?;
        adam.step(&params)?;
        if plateau_stop && losses.len() > PLATEAU_EPOCHS {
            let old = losses[losses.len() - 1 - PLATEAU_EPOCHS];
            if old <= 0.0 || (old - value) / old < PLATEAU_REL_IMPROVEMENT {
                converged_early = true;
                break;
            }
        }
    }
    Ok(PretrainReport { losses, converged_early })
}
