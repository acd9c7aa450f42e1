//! Time stepping for the constant-density acoustic wave equation.
//!
//! The model is embedded in a padded grid: `pml_width` sponge cells on every
//! side plus one outer ring held at zero (Dirichlet). Velocities in the
//! sponge replicate the nearest model edge value. With `κ = dt²v²`, the
//! Laplacian `A` (5-point, `1/dx²`) and the source term `q = f·e_s/dx²`,
//! one step reads
//!
//! ```text
//! u[n+1] = a ⊙ (2u[n] + κ ⊙ (A u[n] + q[n])) − c ⊙ u[n−1]
//! ```
//!
//! where `a = (1+d²)/2`, `c = d²` come from the Cerjan profile `d`
//! (`a = c = 1` outside the sponge). Written this way the scheme is a
//! damped leapfrog whose coefficient matrices are all symmetric after
//! scaling by `1/(aκ)`, so source–receiver reciprocity holds exactly, and
//! the adjoint below is the exact transpose of the discrete forward map.

use crate::error::{Error, Result};
use crate::wavesim::geometry::{check_cfl, AcquisitionGeometry};
use crate::wavesim::model::VelocityModel;

const NAN_CHECK_EVERY: usize = 100;

pub(crate) struct Propagator<'a> {
    geom: &'a AcquisitionGeometry,
    nx: usize,
    nz: usize,
    nxp: usize,
    nzp: usize,
    off: usize,
    inv_dx2: f64,
    dt: f64,
    v_pad: Vec<f64>,
    /// 2a
    two_a: Vec<f64>,
    /// a·κ
    ak: Vec<f64>,
    a: Vec<f64>,
    c: Vec<f64>,
    src_idx: Vec<usize>,
    rec_idx: Vec<usize>,
}

impl<'a> Propagator<'a> {
    pub(crate) fn new(model: &VelocityModel, geom: &'a AcquisitionGeometry) -> Result<Self> {
        model.validate()?;
        geom.validate(model)?;
        check_cfl(model, geom.dt)?;
        let w = geom.pml_width;
        let off = w + 1;
        let (nx, nz) = (model.nx, model.nz);
        let (nxp, nzp) = (nx + 2 * off, nz + 2 * off);
        let dt2 = geom.dt * geom.dt;

        let profile = |p: usize, n: usize| -> f64 {
            // cells into the sponge, measured from the model edge
            let depth = if p < off {
                off - p
            } else if p >= off + n {
                p + 1 - (off + n)
            } else {
                0
            };
            let k = depth.min(w) as f64;
            (-(geom.sponge_alpha * k).powi(2)).exp()
        };

        let npad = nxp * nzp;
        let (mut v_pad, mut two_a, mut ak, mut a, mut c) =
            (vec![0.0; npad], vec![0.0; npad], vec![0.0; npad], vec![0.0; npad], vec![0.0; npad]);
        for izp in 0..nzp {
            let iz = izp.saturating_sub(off).min(nz - 1);
            let dz = profile(izp, nz);
            for ixp in 0..nxp {
                let ix = ixp.saturating_sub(off).min(nx - 1);
                let d = dz * profile(ixp, nx);
                let i = izp * nxp + ixp;
                let v = model.at(ix, iz);
                let d2 = d * d;
                v_pad[i] = v;
                a[i] = 0.5 * (1.0 + d2);
                c[i] = d2;
                two_a[i] = 2.0 * a[i];
                ak[i] = a[i] * dt2 * v * v;
            }
        }
        let idx = |&(ix, iz): &(usize, usize)| (iz + off) * nxp + ix + off;
        Ok(Propagator {
            geom,
            nx,
            nz,
            nxp,
            nzp,
            off,
            inv_dx2: 1.0 / (model.dx_m() * model.dx_m()),
            dt: geom.dt,
            v_pad,
            two_a,
            ak,
            a,
            c,
            src_idx: geom.sources.iter().map(idx).collect(),
            rec_idx: geom.receivers.iter().map(idx).collect(),
        })
    }

    fn npad(&self) -> usize {
        self.nxp * self.nzp
    }

    #[inline(always)]
    fn lap(&self, u: &[f64], i: usize) -> f64 {
        (u[i - 1] + u[i + 1] + u[i - self.nxp] + u[i + self.nxp] - 4.0 * u[i]) * self.inv_dx2
    }

    /// Overwrite `prev` (holding u[n−1]) with u[n+1].
    fn step(&self, prev: &mut [f64], cur: &[f64], shot: usize, n: usize) {
        let nxp = self.nxp;
        for iz in 1..self.nzp - 1 {
            let row = iz * nxp;
            for i in row + 1..row + nxp - 1 {
                prev[i] = self.two_a[i] * cur[i] + self.ak[i] * self.lap(cur, i) - self.c[i] * prev[i];
            }
        }
        let s = self.src_idx[shot];
        prev[s] += self.ak[s] * self.geom.wavelet[n] * self.inv_dx2;
    }

    /// `A u[n] + q[n]` at cell `i`.
    #[inline]
    fn rhs(&self, u: &[f64], i: usize, shot: usize, n: usize) -> f64 {
        let mut r = self.lap(u, i);
        if i == self.src_idx[shot] {
            r += self.geom.wavelet[n] * self.inv_dx2;
        }
        r
    }

    fn check_finite(&self, u: &[f64], shot: usize, step: usize) -> Result<()> {
        if step % NAN_CHECK_EVERY == 0 && u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Unstable { shot, step });
        }
        Ok(())
    }

    fn model_region(&self, u: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.nx * self.nz);
        for iz in 0..self.nz {
            let start = (iz + self.off) * self.nxp + self.off;
            out.extend_from_slice(&u[start..start + self.nx]);
        }
        out
    }

    /// Receiver traces `[nr][nt]` for one shot, optionally with every
    /// model-region snapshot `u[n]`.
    pub(crate) fn forward(&self, shot: usize, keep_history: bool) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let nt = self.geom.nt;
        let mut prev = vec![0.0; self.npad()];
        let mut cur = vec![0.0; self.npad()];
        let mut traces = vec![0.0; self.rec_idx.len() * nt];
        let mut history = Vec::new();
        for n in 0..nt {
            for (r, &ri) in self.rec_idx.iter().enumerate() {
                traces[r * nt + n] = cur[ri];
            }
            if keep_history {
                history.push(self.model_region(&cur));
            }
            if n + 1 == nt {
                break;
            }
            self.step(&mut prev, &cur, shot, n);
            std::mem::swap(&mut prev, &mut cur);
            self.check_finite(&cur, shot, n + 1)?;
        }
        if traces.iter().any(|v| !v.is_finite()) {
            return Err(Error::Unstable { shot, step: nt });
        }
        Ok((traces, history))
    }

    /// Tangent-linear traces for a perturbation `dkappa` of `κ` on the padded grid.
    pub(crate) fn born(&self, shot: usize, dkappa: &[f64]) -> Result<Vec<f64>> {
        let nt = self.geom.nt;
        let np = self.npad();
        let (mut prev, mut cur) = (vec![0.0; np], vec![0.0; np]);
        let (mut dprev, mut dcur) = (vec![0.0; np], vec![0.0; np]);
        let mut traces = vec![0.0; self.rec_idx.len() * nt];
        let nxp = self.nxp;
        for n in 0..nt {
            for (r, &ri) in self.rec_idx.iter().enumerate() {
                traces[r * nt + n] = dcur[ri];
            }
            if n + 1 == nt {
                break;
            }
            for iz in 1..self.nzp - 1 {
                let row = iz * nxp;
                for i in row + 1..row + nxp - 1 {
                    dprev[i] = self.two_a[i] * dcur[i] + self.ak[i] * self.lap(&dcur, i) - self.c[i] * dprev[i]
                        + self.a[i] * dkappa[i] * self.rhs(&cur, i, shot, n);
                }
            }
            self.step(&mut prev, &cur, shot, n);
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut dprev, &mut dcur);
            self.check_finite(&dcur, shot, n + 1)?;
        }
        Ok(traces)
    }

    /// Gradient with respect to `κ` (padded grid) of `Σ_r Σ_n data_grad[r][n]·u_r[n]`.
    ///
    /// States are rebuilt segment by segment from checkpoints every
    /// `⌈√nt⌉` steps, so memory is `O(√nt)` wavefields.
    pub(crate) fn adjoint_kappa(&self, shot: usize, data_grad: &[f64]) -> Result<Vec<f64>> {
        let nt = self.geom.nt;
        let np = self.npad();
        let mut grad = vec![0.0; np];
        if nt < 2 {
            return Ok(grad);
        }
        // states u[0] ..= u[nt-2] are needed
        let n_states = nt - 1;
        let seg = ((n_states as f64).sqrt().ceil() as usize).max(1);

        let mut checkpoints: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        let (mut prev, mut cur) = (vec![0.0; np], vec![0.0; np]);
        for n in 0..n_states {
            if n % seg == 0 {
                checkpoints.push((prev.clone(), cur.clone()));
            }
            if n + 1 < n_states {
                self.step(&mut prev, &cur, shot, n);
                std::mem::swap(&mut prev, &mut cur);
                self.check_finite(&cur, shot, n + 1)?;
            }
        }

        let nxp = self.nxp;
        let (mut l1, mut l2) = (vec![0.0; np], vec![0.0; np]);
        let mut w = vec![0.0; np];
        let mut states: Vec<Vec<f64>> = Vec::with_capacity(seg);
        for (j, (cp_prev, cp_cur)) in checkpoints.iter().enumerate().rev() {
            let start = j * seg;
            let end = (start + seg).min(n_states);
            states.clear();
            let (mut p, mut c) = (cp_prev.clone(), cp_cur.clone());
            for n in start..end {
                states.push(c.clone());
                if n + 1 < end {
                    self.step(&mut p, &c, shot, n);
                    std::mem::swap(&mut p, &mut c);
                }
            }
            // λ[m] for m = end ..= start+1 uses u[m-1] = states[m-1-start]
            for m in (start + 1..=end).rev() {
                for i in 0..np {
                    w[i] = self.ak[i] * l1[i];
                }
                let u_prev = &states[m - 1 - start];
                for iz in 1..self.nzp - 1 {
                    let row = iz * nxp;
                    for i in row + 1..row + nxp - 1 {
                        let lam = self.two_a[i] * l1[i] + self.lap(&w, i) - self.c[i] * l2[i];
                        l2[i] = lam;
                    }
                }
                for (r, &ri) in self.rec_idx.iter().enumerate() {
                    l2[ri] += data_grad[r * nt + m];
                }
                for iz in 1..self.nzp - 1 {
                    let row = iz * nxp;
                    for i in row + 1..row + nxp - 1 {
                        grad[i] += l2[i] * self.a[i] * self.rhs(u_prev, i, shot, m - 1);
                    }
                }
                std::mem::swap(&mut l1, &mut l2);
            }
        }
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::Unstable { shot, step: 0 });
        }
        Ok(grad)
    }

    /// Chain `∂/∂κ` on the padded grid to `∂/∂v` on the model grid
    /// (`κ = dt²v²`, sponge cells fold back onto the edge cell they copy).
    pub(crate) fn kappa_to_velocity_grad(&self, gk: &[f64]) -> Vec<f64> {
        let dt2 = self.dt * self.dt;
        let mut g = vec![0.0; self.nx * self.nz];
        for izp in 1..self.nzp - 1 {
            let iz = izp.saturating_sub(self.off).min(self.nz - 1);
            for ixp in 1..self.nxp - 1 {
                let ix = ixp.saturating_sub(self.off).min(self.nx - 1);
                let i = izp * self.nxp + ixp;
                g[iz * self.nx + ix] += 2.0 * dt2 * self.v_pad[i] * gk[i];
            }
        }
        g
    }

    /// Map a model-grid velocity perturbation to the padded `κ` perturbation.
    pub(crate) fn velocity_to_kappa_pert(&self, dv: &[f64]) -> Vec<f64> {
        let dt2 = self.dt * self.dt;
        let mut dk = vec![0.0; self.npad()];
        for izp in 1..self.nzp - 1 {
            let iz = izp.saturating_sub(self.off).min(self.nz - 1);
            for ixp in 1..self.nxp - 1 {
                let ix = ixp.saturating_sub(self.off).min(self.nx - 1);
                let i = izp * self.nxp + ixp;
                dk[i] = 2.0 * dt2 * self.v_pad[i] * dv[iz * self.nx + ix];
            }
        }
        dk
    }
}
