mod common;

use common::*;
use pgfwi_core::fwi::FwiConfig;
use pgfwi_core::gan::{
    adversarial_gradient, build_batch, disc_loss, draw_batch, gen_loss, gen_loss_value, generator_produce,
    gradient_penalty, sample_scale, sample_space, scatter_sample_grad, train, vanilla_disc_loss, vanilla_gen_loss,
    Critic, GanConfig, GeneratorState, LossKind, SampleDraw, TrainInputs, UNetArch, METRICS_HEADER,
};
use pgfwi_core::nets::{Discriminator, DiscriminatorConfig, UNet, UNetConfig, Upsample};
use pgfwi_core::wavesim::{forward_all, io, AcquisitionGeometry, ShotGather, VelocityModel};
use pgfwi_tensor::Tensor;
use rand::Rng;

fn scores(v: &[f64]) -> Tensor {
    Tensor::from_vec(&[v.len(), 1], v.to_vec()).unwrap()
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[test]
fn vanilla_losses_at_indifference() {
    let zero = scores(&[0.0; 4]);
    let ld = vanilla_disc_loss(&zero, &zero).unwrap().item();
    let lg = vanilla_gen_loss(&zero).item();
    assert!((ld - 2.0 * 2f64.ln()).abs() < 1e-12, "{ld}");
    assert!((lg - 2f64.ln()).abs() < 1e-12, "{lg}");
}

#[test]
fn vanilla_losses_by_hand() {
    let ld = vanilla_disc_loss(&scores(&[logit(0.9)]), &scores(&[logit(0.2)])).unwrap().item();
    assert!((ld + 0.9f64.ln() + 0.8f64.ln()).abs() < 1e-12, "{ld}");
    // a critic that is sure the fakes are real leaves the generator almost nothing to gain
    let lg = vanilla_gen_loss(&scores(&[40.0])).item();
    assert!(lg > 0.0 && lg < 2e-7, "{lg}");
    for s in [1e6, -1e6, 1e300] {
        let t = scores(&[s, -s]);
        assert!(vanilla_disc_loss(&t, &t).unwrap().item().is_finite());
        assert!(vanilla_gen_loss(&t).item().is_finite());
    }
}

/// `D(x) = ⟨w, x⟩` with a fixed weight vector.
struct LinearCritic(Tensor);

impl Critic for LinearCritic {
    fn score(&self, batch: &Tensor) -> pgfwi_core::Result<Tensor> {
        Ok(batch.flatten()?.linear(&self.0, None)?)
    }
}

fn linear_critic(n: usize, norm_target: f64, seed: u64) -> LinearCritic {
    let mut r = rng(seed);
    let w: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let s = norm_target / norm(&w);
    LinearCritic(Tensor::from_vec(&[1, n], w.iter().map(|x| x * s).collect()).unwrap())
}

fn random_batch(b: usize, h: usize, w: usize, seed: u64) -> Tensor {
    let mut r = rng(seed);
    Tensor::from_vec(&[b, 1, h, w], (0..b * h * w).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn gradient_penalty_of_linear_critics() {
    let (real, fake) = (random_batch(3, 4, 4, 1), random_batch(3, 4, 4, 2));
    let eps = [0.1, 0.5, 0.9];
    let unit = linear_critic(16, 1.0, 3);
    assert!(gradient_penalty(&unit, &real, &fake, &eps).unwrap().item() < 1e-24);
    let double = linear_critic(16, 2.0, 3);
    let gp = gradient_penalty(&double, &real, &fake, &eps).unwrap().item();
    assert!((gp - 1.0).abs() < 1e-12, "{gp}");

    let mean_score = |t: &Tensor| unit.score(t).unwrap().mean().item();
    let l = disc_loss(&unit, &real, &fake, LossKind::WganGp, 10.0, &eps).unwrap().item();
    assert!((l - (mean_score(&fake) - mean_score(&real))).abs() < 1e-12);
    let g = gen_loss(&unit, &fake, LossKind::WganGp).unwrap().item();
    assert!((g + mean_score(&fake)).abs() < 1e-12);
}

#[test]
fn sample_map_adjoint() {
    let mut r = rng(11);
    let (ns, nr, nt) = (2, 9, 37);
    let g = ShotGather::new(ns, nr, nt, (0..ns * nr * nt).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
    let draws = draw_batch(&mut r, &sample_space(ns, 3), 6);
    let size = (8, 16);
    let scale = 0.37;
    let fwd = build_batch(&g, &draws, size, scale, false).unwrap().to_vec();
    let y: Vec<f64> = (0..fwd.len()).map(|_| r.random_range(-1.0..1.0)).collect();
    let mut back = ShotGather::zeros(ns, nr, nt);
    scatter_sample_grad(&y, &draws, size, scale, &mut back);
    let (lhs, rhs) = (dot(&fwd, &y), dot(&g.traces, &back.traces));
    assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    assert_eq!(sample_space(2, 3).len(), 12);
}

fn small_setup() -> (VelocityModel, AcquisitionGeometry) {
    let model = smooth_random_model(24, 12, 0.01, 2200.0, 200.0, 4);
    let geom = AcquisitionGeometry::surface(24, 2, 1, 0, 1e-3, 220, 25.0);
    (model, geom)
}

fn small_disc(seed: u64) -> Discriminator {
    let cfg = DiscriminatorConfig { base_channels: 2, n_blocks: 2, fc_hidden: 8, input_size: (16, 16), ..Default::default() };
    Discriminator::new(cfg, seed).unwrap()
}

#[test]
fn adversarial_gradient_matches_finite_differences() {
    let (model, geom) = small_setup();
    let d_syn = forward_all(&model, &geom).unwrap();
    let scale = sample_scale(&d_syn);
    let disc = small_disc(5);
    let draws = vec![
        SampleDraw { shot: 0, stride: 1, offset: 0 },
        SampleDraw { shot: 1, stride: 2, offset: 1 },
        SampleDraw { shot: 1, stride: 3, offset: 0 },
    ];
    for kind in [LossKind::Vanilla, LossKind::WganGp] {
        let (loss, grad) = adversarial_gradient(&disc, &model, &d_syn, &geom, &draws, scale, kind).unwrap();
        let base = gen_loss_value(&disc, &model, &geom, &draws, scale, kind).unwrap();
        assert!((loss - base).abs() < 1e-12);
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let h = 0.5;
        for (ix, iz) in [(3, 1), (8, 2), (12, 4), (18, 3), (20, 6)] {
            let i = iz * model.nx + ix;
            let mut p = model.clone();
            p.v[i] += h;
            let mut m = model.clone();
            m.v[i] -= h;
            let fd = (gen_loss_value(&disc, &p, &geom, &draws, scale, kind).unwrap()
                - gen_loss_value(&disc, &m, &geom, &draws, scale, kind).unwrap())
                / (2.0 * h);
            let err = (fd - grad[i]).abs() / grad[i].abs().max(1e-3 * gmax);
            assert!(err < 1e-3, "{kind:?} cell ({ix},{iz}): fd {fd} vs adjoint {}", grad[i]);
        }
    }
}

fn small_unet(ns: usize, model: &VelocityModel, v_range: (f64, f64), seed: u64) -> UNet {
    let cfg = UNetConfig {
        in_channels: ns,
        base_channels: 2,
        out_grid: (model.nx, model.nz),
        v_range,
        input_resample: (16, 16),
        upsample: Upsample::TransposedConv,
    };
    UNet::new(cfg, seed).unwrap()
}

#[test]
fn generator_pass_through_and_fixed_point() {
    let (v_true, geom) = small_setup();
    let d_obs = forward_all(&v_true, &geom).unwrap();
    let fwi = FwiConfig { v_clip: (1800.0, 2600.0), ..FwiConfig::default() };

    let mut state = GeneratorState::new(small_unet(2, &v_true, fwi.v_clip, 1), fwi.lr);
    let mut expected = state.unet.predict(&d_obs, v_true.dx_km).unwrap();
    expected.clamp(fwi.v_clip.0, fwi.v_clip.1);
    let (v, d) = generator_produce(&mut state, &d_obs, &geom, &fwi, 0, v_true.dx_km).unwrap();
    assert_eq!(v, expected);
    assert_eq!(d, forward_all(&expected, &geom).unwrap());

    // at the true model the data already match, so refinement leaves it alone
    state.v_current = Some(v_true.clone());
    let (v, d) = generator_produce(&mut state, &d_obs, &geom, &fwi, 3, v_true.dx_km).unwrap();
    assert_eq!(v, v_true);
    assert_eq!(d, d_obs);

    let run = |seed| {
        let mut s = GeneratorState::new(small_unet(2, &v_true, fwi.v_clip, seed), fwi.lr);
        generator_produce(&mut s, &d_obs, &geom, &fwi, 2, v_true.dx_km).unwrap().0
    };
    assert_eq!(run(9), run(9));
}

fn tiny_gan(epochs: usize) -> GanConfig {
    GanConfig {
        epochs,
        batch_size: 4,
        fwi_inner_iters: 2,
        distill_every: 2,
        distill_steps: 2,
        pretrain_epochs: 3,
        checkpoint_every: 2,
        seed: 3,
        unet: UNetArch { base_channels: 2, input_resample: (16, 16), upsample: Upsample::Bilinear },
        discriminator: DiscriminatorConfig {
            base_channels: 2,
            n_blocks: 2,
            fc_hidden: 8,
            input_size: (16, 16),
            ..Default::default()
        },
        ..GanConfig::default()
    }
}

#[test]
fn zero_epochs_returns_the_initial_model() {
    let (v_true, geom) = small_setup();
    let d_obs = forward_all(&v_true, &geom).unwrap();
    let v_init = VelocityModel::constant(24, 12, 0.01, 2200.0).unwrap();
    let fwi = FwiConfig { v_clip: (1800.0, 2600.0), ..FwiConfig::default() };
    let dir = tempfile::tempdir().unwrap();
    let inputs = TrainInputs { d_obs: &d_obs, geom: &geom, v_init: &v_init, v_true: Some(&v_true) };
    let out = train(&tiny_gan(0), &fwi, &inputs, Some(dir.path())).unwrap();
    assert_eq!(out.v_final, v_init);
    assert!(out.rows.is_empty());
    assert_eq!(std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap(), format!("{METRICS_HEADER}\n"));
    assert_eq!(io::load_model(&dir.path().join("final/v_final.bin")).unwrap(), v_init);
}

#[test]
fn training_schedule_is_audited_and_reproducible() {
    let (v_true, geom) = small_setup();
    let d_obs = forward_all(&v_true, &geom).unwrap();
    let v_init = VelocityModel::constant(24, 12, 0.01, 2200.0).unwrap();
    let fwi = FwiConfig { v_clip: (1800.0, 2600.0), ..FwiConfig::default() };
    let inputs = TrainInputs { d_obs: &d_obs, geom: &geom, v_init: &v_init, v_true: Some(&v_true) };
    let cfg = tiny_gan(3);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let out = train(&cfg, &fwi, &inputs, Some(a.path())).unwrap();
    train(&cfg, &fwi, &inputs, Some(b.path())).unwrap();

    assert_eq!(out.audit, vec![(1, 6, 1), (2, 6, 1), (3, 6, 1)]);
    assert_eq!((out.summary.d_updates, out.summary.g_updates), (18, 3));
    let log = std::fs::read_to_string(a.path().join("audit.log")).unwrap();
    assert_eq!(log.lines().next(), Some("epoch 1: d_steps=6 g_steps=1"));
    for f in ["metrics.csv", "checkpoints/epoch_2.wgt1", "checkpoints/epoch_3.wgt1", "final/v_final.bin"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let csv = std::fs::read_to_string(a.path().join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(out.v_final.vmin() >= 1800.0 && out.v_final.vmax() <= 2600.0);

    let too_big = GanConfig { batch_size: 100, ..cfg };
    assert!(train(&too_big, &fwi, &inputs, None).is_err());
}
