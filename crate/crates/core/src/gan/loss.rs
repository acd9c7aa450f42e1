//! Discriminator and generator objectives.

use pgfwi_tensor::{grad_of_grad, Tensor};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::nets::Discriminator;

/// Probability clamp used before taking logs.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Vanilla,
    WganGp,
}

impl std::str::FromStr for LossKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "vanilla" => Ok(LossKind::Vanilla),
            "wgan_gp" | "wgan-gp" => Ok(LossKind::WganGp),
            other => Err(format!("unknown loss '{other}' (expected vanilla or wgan_gp)")),
        }
    }
}

/// Anything that maps a `(B, C, H, W)` batch to `(B, 1)` raw scores.
pub trait Critic {
    fn score(&self, batch: &Tensor) -> Result<Tensor>;
}

impl Critic for Discriminator {
    fn score(&self, batch: &Tensor) -> Result<Tensor> {
        self.forward(batch)
    }
}

fn log_prob(scores: &Tensor) -> Tensor {
    scores.sigmoid().clamp(PROB_EPS, 1.0 - PROB_EPS).log()
}

fn log_one_minus_prob(scores: &Tensor) -> Tensor {
    scores.sigmoid().clamp(PROB_EPS, 1.0 - PROB_EPS).scalar_mul(-1.0).add_scalar(1.0).log()
}

/// `−mean log σ(s_real) − mean log(1 − σ(s_fake))`.
pub fn vanilla_disc_loss(real_scores: &Tensor, fake_scores: &Tensor) -> Result<Tensor> {
    Ok(log_prob(real_scores).mean().add(&log_one_minus_prob(fake_scores).mean())?.scalar_mul(-1.0))
}

/// `−mean log σ(s_fake)`.
pub fn vanilla_gen_loss(fake_scores: &Tensor) -> Tensor {
    log_prob(fake_scores).mean().scalar_mul(-1.0)
}

/// `mean((‖∇ₓ D(x̂)‖ − 1)²)` at `x̂ = ε·real + (1 − ε)·fake`, one `ε` per sample.
pub fn gradient_penalty(critic: &dyn Critic, real: &Tensor, fake: &Tensor, eps: &[f64]) -> Result<Tensor> {
    let shape = real.shape().to_vec();
    let b = shape[0];
    let per = real.numel() / b;
    let (r, f) = (real.data(), fake.data());
    let mixed: Vec<f64> = (0..real.numel()).map(|i| {
        let e = eps[i / per];
        e * r[i] + (1.0 - e) * f[i]
    }).collect();
    drop((r, f));
    let x_hat = Tensor::param(&shape, mixed)?;
    let scores = critic.score(&x_hat)?;
    let g = grad_of_grad(&scores, &x_hat)?;
    let norms = g.reshape(&[b, per])?.square().row_sum()?.sqrt();
    Ok(norms.add_scalar(-1.0).square().mean())
}

/// Discriminator objective for either formulation. `eps` supplies the
/// interpolation weights for the penalty (ignored for vanilla).
pub fn disc_loss(
    critic: &dyn Critic,
    real: &Tensor,
    fake: &Tensor,
    kind: LossKind,
    gp_lambda: f64,
    eps: &[f64],
) -> Result<Tensor> {
    let real_scores = critic.score(real)?;
    let fake_scores = critic.score(fake)?;
    match kind {
        LossKind::Vanilla => vanilla_disc_loss(&real_scores, &fake_scores),
        LossKind::WganGp => {
            let w = fake_scores.mean().sub(&real_scores.mean())?;
            let gp = gradient_penalty(critic, real, fake, eps)?;
            Ok(w.add(&gp.scalar_mul(gp_lambda))?)
        }
    }
}

pub fn gen_loss(critic: &dyn Critic, fake: &Tensor, kind: LossKind) -> Result<Tensor> {
    let scores = critic.score(fake)?;
    Ok(match kind {
        LossKind::Vanilla => vanilla_gen_loss(&scores),
        LossKind::WganGp => scores.mean().scalar_mul(-1.0),
    })
}
