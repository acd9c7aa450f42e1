//! 2-D constant-density acoustic finite-difference modeling, its adjoint,
//! and the least-squares data misfit.

mod gather;
mod geometry;
pub mod io;
mod model;
mod propagator;

use rayon::prelude::*;

pub use gather::ShotGather;
pub use geometry::{
    check_cfl, max_stable_dt, ricker_wavelet, AcquisitionGeometry, DEFAULT_PML_WIDTH, DEFAULT_SPONGE_ALPHA,
};
pub use model::VelocityModel;

use crate::error::{Error, Result};
use propagator::Propagator;

/// One shot's receiver traces, `[nr][nt]` flattened.
pub fn forward_model(model: &VelocityModel, geom: &AcquisitionGeometry, shot: usize) -> Result<Vec<f64>> {
    check_shot(geom, shot)?;
    Ok(Propagator::new(model, geom)?.forward(shot, false)?.0)
}

/// Like [`forward_model`], also returning every wavefield snapshot `u[n]`
/// over the model region (`nt` snapshots of `nx·nz`).
pub fn forward_model_with_history(
    model: &VelocityModel,
    geom: &AcquisitionGeometry,
    shot: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    check_shot(geom, shot)?;
    Propagator::new(model, geom)?.forward(shot, true)
}

/// All shots, run in parallel and stacked in shot order.
pub fn forward_all(model: &VelocityModel, geom: &AcquisitionGeometry) -> Result<ShotGather> {
    let prop = Propagator::new(model, geom)?;
    let shots = (0..geom.ns())
        .into_par_iter()
        .map(|s| prop.forward(s, false).map(|r| r.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(ShotGather::from_shots(geom.nr(), geom.nt, shots))
}

/// `∂⟨w, F(v)⟩/∂v` for a data-space weight `w`, i.e. the adjoint of the
/// linearized forward operator applied to `w`. Shot contributions are
/// summed in shot order.
pub fn data_gradient(model: &VelocityModel, geom: &AcquisitionGeometry, weights: &ShotGather) -> Result<Vec<f64>> {
    check_dims(geom, weights)?;
    let prop = Propagator::new(model, geom)?;
    let per_shot = (0..geom.ns())
        .into_par_iter()
        .map(|s| prop.adjoint_kappa(s, weights.shot(s)))
        .collect::<Result<Vec<_>>>()?;
    let mut gk = vec![0.0; per_shot[0].len()];
    for g in &per_shot {
        gk.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    Ok(prop.kappa_to_velocity_grad(&gk))
}

/// Misfit `E = ½·Σ (d_syn − d_obs)²` over every sample.
pub fn misfit(model: &VelocityModel, geom: &AcquisitionGeometry, d_obs: &ShotGather) -> Result<f64> {
    check_dims(geom, d_obs)?;
    let d_syn = forward_all(model, geom)?;
    Ok(half_sq_residual(&d_syn, d_obs).0)
}

/// Misfit and its gradient with respect to every velocity cell.
pub fn misfit_gradient(
    model: &VelocityModel,
    geom: &AcquisitionGeometry,
    d_obs: &ShotGather,
) -> Result<(f64, Vec<f64>)> {
    check_dims(geom, d_obs)?;
    let d_syn = forward_all(model, geom)?;
    let (e, residual) = half_sq_residual(&d_syn, d_obs);
    let g = data_gradient(model, geom, &residual)?;
    Ok((e, g))
}

/// Born (tangent-linear) data `F'(v)·dv` for a velocity perturbation `dv`.
pub fn linearized_forward(model: &VelocityModel, geom: &AcquisitionGeometry, dv: &[f64]) -> Result<ShotGather> {
    if dv.len() != model.nx * model.nz {
        return Err(Error::Shape(format!(
            "perturbation has {} cells, model has {}",
            dv.len(),
            model.nx * model.nz
        )));
    }
    let prop = Propagator::new(model, geom)?;
    let dk = prop.velocity_to_kappa_pert(dv);
    let shots = (0..geom.ns())
        .into_par_iter()
        .map(|s| prop.born(s, &dk))
        .collect::<Result<Vec<_>>>()?;
    Ok(ShotGather::from_shots(geom.nr(), geom.nt, shots))
}

fn half_sq_residual(d_syn: &ShotGather, d_obs: &ShotGather) -> (f64, ShotGather) {
    let traces: Vec<f64> = d_syn.traces.iter().zip(&d_obs.traces).map(|(s, o)| s - o).collect();
    let e = 0.5 * traces.iter().map(|r| r * r).sum::<f64>();
    (e, ShotGather { ns: d_syn.ns, nr: d_syn.nr, nt: d_syn.nt, traces })
}

fn check_shot(geom: &AcquisitionGeometry, shot: usize) -> Result<()> {
    if shot >= geom.ns() {
        return Err(Error::InvalidGeometry(format!("shot {shot} out of range (ns = {})", geom.ns())));
    }
    Ok(())
}

fn check_dims(geom: &AcquisitionGeometry, d: &ShotGather) -> Result<()> {
    if (d.ns, d.nr, d.nt) != (geom.ns(), geom.nr(), geom.nt) || d.traces.len() != d.ns * d.nr * d.nt {
        return Err(Error::Shape(format!(
            "gather ({}, {}, {}) does not match geometry ({}, {}, {})",
            d.ns,
            d.nr,
            d.nt,
            geom.ns(),
            geom.nr(),
            geom.nt
        )));
    }
    Ok(())
}
