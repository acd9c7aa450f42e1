use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

/// Adam with bias correction. Moment buffers are sized on the first step.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<Vec<f64>>,
    v2: Vec<Vec<f64>>,
}

impl Default for AdamState {
    fn default() -> Self {
        AdamState::new(1e-3)
    }
}

impl AdamState {
    pub fn new(lr: f64) -> Self {
        AdamState {
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: Vec::new(),
            v2: Vec::new(),
        }
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.v2
    }

    fn ensure_buffers(&mut self, sizes: &[usize]) {
        if self.m.is_empty() {
            self.m = sizes.iter().map(|&n| vec![0.0; n]).collect();
            self.v2 = self.m.clone();
        }
        assert_eq!(self.m.len(), sizes.len(), "parameter list changed between Adam steps");
        for (buf, &n) in self.m.iter().zip(sizes) {
            assert_eq!(buf.len(), n, "parameter size changed between Adam steps");
        }
    }

    /// Update raw parameter buffers from matching gradient buffers.
    pub fn step_slices(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        assert_eq!(params.len(), grads.len());
        let sizes: Vec<usize> = params.iter().map(|p| p.len()).collect();
        self.ensure_buffers(&sizes);
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            assert_eq!(p.len(), g.len());
            let (m, v) = (&mut self.m[i], &mut self.v2[i]);
            for j in 0..p.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                p[j] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }

    /// One Adam step over leaf parameters; their gradients are cleared afterwards.
    pub fn step(&mut self, params: &[Tensor]) -> Result<()> {
        let mut grads = Vec::with_capacity(params.len());
        for (index, p) in params.iter().enumerate() {
            grads.push(p.grad().ok_or(TensorError::MissingGrad { index })?);
        }
        let mut values: Vec<Vec<f64>> = params.iter().map(Tensor::to_vec).collect();
        {
            let mut views: Vec<&mut [f64]> = values.iter_mut().map(|v| v.as_mut_slice()).collect();
            let gviews: Vec<&[f64]> = grads.iter().map(|g| g.as_slice()).collect();
            self.step_slices(&mut views, &gviews);
        }
        for (p, v) in params.iter().zip(&values) {
            p.set_data(v);
            p.zero_grad();
        }
        Ok(())
    }
}

/// Clear gradients on a set of parameters.
pub fn zero_grads(params: &[Tensor]) {
    params.iter().for_each(Tensor::zero_grad);
}
