//! Reverse-mode traversal: first-order `backward` over raw buffers, and a
//! graph-building variant used for gradient penalties.

use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use crate::error::{Result, TensorError};
use crate::ops::conv::{conv2d_backward, conv_transpose2d_backward};
use crate::ops::elementwise::unary_derivative;
use crate::ops::linalg::{gemm, transpose_buf};
use crate::ops::pool::{gather, scatter};
use crate::ops::resize::bilinear_resample_adjoint;
use crate::ops::shape::split_concat;
use crate::tensor::{Node, Op, Saved, Tensor};

/// Nodes reachable from `root` that require grad, parents before children.
fn topo_order(root: &Tensor) -> Vec<Tensor> {
    let mut order = Vec::new();
    let mut seen: HashSet<*const Node> = HashSet::new();
    let mut stack: Vec<(Tensor, bool)> = vec![(root.clone(), false)];
    while let Some((t, expanded)) = stack.pop() {
        if expanded {
            order.push(t);
            continue;
        }
        if !t.requires_grad() || !seen.insert(t.key()) {
            continue;
        }
        stack.push((t.clone(), true));
        if let Some(op) = &t.0.op {
            for p in op.parents.iter().rev() {
                if p.requires_grad() && !seen.contains(&p.key()) {
                    stack.push((p.clone(), false));
                }
            }
        }
    }
    order
}

/// Back-propagate from a single-element `loss`, accumulating into the `grad`
/// of every leaf that requires grad (and of non-leaves marked with
/// [`Tensor::retain_grad`]).
pub fn backward(loss: &Tensor) -> Result<()> {
    if loss.numel() != 1 {
        return Err(TensorError::NonScalarLoss(loss.shape().to_vec()));
    }
    if !loss.requires_grad() {
        return Ok(());
    }
    let order = topo_order(loss);
    let mut grads: HashMap<*const Node, Vec<f64>> = HashMap::new();
    grads.insert(loss.key(), vec![1.0]);
    for t in order.iter().rev() {
        let Some(g) = grads.remove(&t.key()) else { continue };
        match &t.0.op {
            None => t.accumulate_grad(&g),
            Some(op) => {
                if t.0.retain.get() {
                    t.accumulate_grad(&g);
                }
                for (parent, pg) in op.parents.iter().zip(vjp(op, t, &g)) {
                    let Some(pg) = pg else { continue };
                    if !parent.requires_grad() {
                        continue;
                    }
                    match grads.get_mut(&parent.key()) {
                        Some(acc) => acc.iter_mut().zip(&pg).for_each(|(a, b)| *a += *b),
                        None => {
                            grads.insert(parent.key(), pg);
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn vjp(op: &Op, out: &Tensor, g: &[f64]) -> Vec<Option<Vec<f64>>> {
    let p = &op.parents;
    let want = |i: usize| p[i].requires_grad();
    match &op.saved {
        Saved::Add => vec![Some(g.to_vec()), Some(g.to_vec())],
        Saved::Sub => vec![Some(g.to_vec()), Some(g.iter().map(|v| -v).collect())],
        Saved::Mul => {
            let (a, b) = (p[0].data(), p[1].data());
            let ga = want(0).then(|| g.iter().zip(b.iter()).map(|(x, y)| x * y).collect());
            let gb = want(1).then(|| g.iter().zip(a.iter()).map(|(x, y)| x * y).collect());
            vec![ga, gb]
        }
        Saved::MatMul => {
            let (m, k, n) = (p[0].shape()[0], p[0].shape()[1], p[1].shape()[1]);
            let ga = want(0).then(|| {
                let mut ga = vec![0.0; m * k];
                gemm(m, n, k, g, false, &p[1].data(), true, 0.0, &mut ga);
                ga
            });
            let gb = want(1).then(|| {
                let mut gb = vec![0.0; k * n];
                gemm(k, m, n, &p[0].data(), true, g, false, 0.0, &mut gb);
                gb
            });
            vec![ga, gb]
        }
        Saved::Transpose => {
            let (r, c) = (p[0].shape()[0], p[0].shape()[1]);
            vec![Some(transpose_buf(g, c, r))]
        }
        Saved::Linear => {
            let (batch, fan_in, fan_out) = (p[0].shape()[0], p[0].shape()[1], p[1].shape()[0]);
            let gx = want(0).then(|| {
                let mut gx = vec![0.0; batch * fan_in];
                gemm(batch, fan_out, fan_in, g, false, &p[1].data(), false, 0.0, &mut gx);
                gx
            });
            let gw = want(1).then(|| {
                let mut gw = vec![0.0; fan_out * fan_in];
                gemm(fan_out, batch, fan_in, g, true, &p[0].data(), false, 0.0, &mut gw);
                gw
            });
            let mut res = vec![gx, gw];
            if p.len() == 3 {
                let mut gb = vec![0.0; fan_out];
                for row in g.chunks(fan_out) {
                    gb.iter_mut().zip(row).for_each(|(a, b)| *a += *b);
                }
                res.push(Some(gb));
            }
            res
        }
        Saved::Conv2d { stride, pad } => {
            let (dx, dw, db) = conv2d_backward(&p[0], &p[1], p.len() == 3, *stride, *pad, g);
            let mut res = vec![Some(dx), Some(dw)];
            if p.len() == 3 {
                res.push(db);
            }
            res
        }
        Saved::ConvTranspose2d { stride, pad } => {
            let (dx, dw, db) = conv_transpose2d_backward(&p[0], &p[1], p.len() == 3, *stride, *pad, g);
            let mut res = vec![Some(dx), Some(dw)];
            if p.len() == 3 {
                res.push(db);
            }
            res
        }
        Saved::MaxPool2d { argmax } => vec![Some(scatter(g, argmax, p[0].numel()))],
        Saved::MaxUnpool { argmax } => vec![Some(gather(g, argmax))],
        Saved::MulConst(mask) => vec![Some(g.iter().zip(mask.iter()).map(|(a, m)| a * m).collect())],
        s @ (Saved::ScalarMul(_)
        | Saved::AddScalar
        | Saved::Relu
        | Saved::LeakyRelu(_)
        | Saved::Sigmoid
        | Saved::Square
        | Saved::Log
        | Saved::Abs
        | Saved::Sqrt
        | Saved::Clamp { .. }) => {
            let (x, y) = (p[0].data(), out.data());
            let gx = g
                .iter()
                .zip(x.iter().zip(y.iter()))
                .map(|(gv, (&xv, &yv))| gv * unary_derivative(s, xv, yv))
                .collect();
            vec![Some(gx)]
        }
        Saved::Sum => vec![Some(vec![g[0]; p[0].numel()])],
        Saved::Mean => {
            let n = p[0].numel();
            vec![Some(vec![g[0] / n as f64; n])]
        }
        Saved::RowSum => {
            let cols = p[0].shape()[1];
            vec![Some(g.iter().flat_map(|&v| std::iter::repeat_n(v, cols)).collect())]
        }
        Saved::Expand => vec![Some(vec![g.iter().sum()])],
        Saved::Reshape => vec![Some(g.to_vec())],
        Saved::Concat { axis } => split_concat(g, p, *axis).into_iter().map(Some).collect(),
        Saved::BilinearResize => {
            let nd = p[0].ndim();
            let (h, w) = (p[0].shape()[nd - 2], p[0].shape()[nd - 1]);
            let (ho, wo) = (out.shape()[nd - 2], out.shape()[nd - 1]);
            vec![Some(bilinear_resample_adjoint(g, h, w, ho, wo))]
        }
    }
}

/// Differentiable gradient of `output` (summed if not scalar) with respect to
/// `wrt`, built from graph ops so that it can itself be differentiated.
///
/// Only ops whose backward rule is expressible with first-order
/// differentiable ops are supported along the path from `wrt` to `output`:
/// the piecewise-linear network layers (conv, transposed conv, linear,
/// matmul, max-pool, (leaky) ReLU, clamp, abs), elementwise add/sub/mul,
/// scalar ops, square, reshape and full reductions. Anything else on the
/// path yields [`TensorError::UnsupportedHigherOrder`].
pub fn grad_of_grad(output: &Tensor, wrt: &Tensor) -> Result<Tensor> {
    let order = topo_order(output);
    let mut on_path: HashSet<*const Node> = HashSet::new();
    for t in &order {
        let reaches = t.same_node(wrt)
            || t.0
                .op
                .as_ref()
                .is_some_and(|op| op.parents.iter().any(|p| on_path.contains(&p.key())));
        if reaches {
            on_path.insert(t.key());
        }
    }
    if !on_path.contains(&wrt.key()) || !on_path.contains(&output.key()) {
        return Err(TensorError::NotOnGraph);
    }

    let seed = Tensor::from_vec(output.shape(), vec![1.0; output.numel()])?;
    let mut grads: HashMap<*const Node, Tensor> = HashMap::new();
    grads.insert(output.key(), seed);
    for t in order.iter().rev() {
        if !on_path.contains(&t.key()) || t.same_node(wrt) {
            continue;
        }
        let Some(g) = grads.remove(&t.key()) else { continue };
        let Some(op) = &t.0.op else { continue };
        let wanted: Vec<bool> = op.parents.iter().map(|p| on_path.contains(&p.key())).collect();
        for (i, pg) in vjp_graph(op, &g, &wanted)?.into_iter().enumerate() {
            let Some(pg) = pg else { continue };
            let key = op.parents[i].key();
            let acc = match grads.remove(&key) {
                Some(prev) => prev.add(&pg)?,
                None => pg,
            };
            grads.insert(key, acc);
        }
    }
    grads.remove(&wrt.key()).ok_or(TensorError::NotOnGraph)
}

fn vjp_graph(op: &Op, g: &Tensor, wanted: &[bool]) -> Result<Vec<Option<Tensor>>> {
    let p = &op.parents;
    let unsupported = || Err(TensorError::UnsupportedHigherOrder(op.saved.name()));
    let only_input = |what: &[bool]| what.iter().skip(1).all(|w| !w);
    let pick = |i: usize, f: &dyn Fn() -> Result<Tensor>| -> Result<Option<Tensor>> {
        if wanted[i] {
            f().map(Some)
        } else {
            Ok(None)
        }
    };
    let mask_from = |f: &dyn Fn(f64) -> f64| Rc::new(p[0].data().iter().map(|&x| f(x)).collect::<Vec<_>>());
    match &op.saved {
        Saved::Add => Ok(vec![pick(0, &|| Ok(g.clone()))?, pick(1, &|| Ok(g.clone()))?]),
        Saved::Sub => Ok(vec![pick(0, &|| Ok(g.clone()))?, pick(1, &|| Ok(g.scalar_mul(-1.0)))?]),
        Saved::Mul => Ok(vec![pick(0, &|| g.mul(&p[1]))?, pick(1, &|| g.mul(&p[0]))?]),
        Saved::ScalarMul(c) => Ok(vec![Some(g.scalar_mul(*c))]),
        Saved::AddScalar | Saved::Reshape => Ok(vec![Some(g.reshape(p[0].shape())?)]),
        Saved::Square => Ok(vec![Some(g.mul(&p[0].scalar_mul(2.0))?)]),
        Saved::Sum => Ok(vec![Some(g.expand(p[0].shape())?)]),
        Saved::Mean => Ok(vec![Some(g.scalar_mul(1.0 / p[0].numel() as f64).expand(p[0].shape())?)]),
        Saved::Relu => Ok(vec![Some(g.mul_const(mask_from(&|x| if x > 0.0 { 1.0 } else { 0.0 })))]),
        Saved::LeakyRelu(s) => {
            let s = *s;
            Ok(vec![Some(g.mul_const(mask_from(&|x| if x > 0.0 { 1.0 } else { s })))])
        }
        Saved::Abs => Ok(vec![Some(g.mul_const(mask_from(&|x| {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        })))]),
        Saved::Clamp { lo, hi } => {
            let (lo, hi) = (*lo, *hi);
            Ok(vec![Some(g.mul_const(mask_from(&|x| if x >= lo && x <= hi { 1.0 } else { 0.0 })))])
        }
        Saved::MulConst(mask) => Ok(vec![Some(g.mul_const(mask.clone()))]),
        Saved::MaxPool2d { argmax } => Ok(vec![Some(g.max_unpool(argmax.clone(), p[0].shape()))]),
        Saved::Transpose => Ok(vec![Some(g.transpose()?)]),
        Saved::MatMul => Ok(vec![
            pick(0, &|| g.matmul(&p[1].transpose()?))?,
            pick(1, &|| p[0].transpose()?.matmul(g))?,
        ]),
        Saved::Linear => {
            let mut res = vec![pick(0, &|| g.matmul(&p[1]))?, pick(1, &|| g.transpose()?.matmul(&p[0]))?];
            if p.len() == 3 {
                res.push(pick(2, &|| g.transpose()?.row_sum())?);
            }
            Ok(res)
        }
        Saved::Conv2d { stride, pad } => {
            if !only_input(wanted) {
                return unsupported();
            }
            let gx = g.conv_transpose2d(&p[1], None, *stride, *pad)?;
            if gx.shape() != p[0].shape() {
                return unsupported();
            }
            let mut res = vec![Some(gx)];
            res.resize(p.len(), None);
            Ok(res)
        }
        Saved::ConvTranspose2d { stride, pad } => {
            if !only_input(wanted) {
                return unsupported();
            }
            let gx = g.conv2d(&p[1], None, *stride, *pad)?;
            if gx.shape() != p[0].shape() {
                return unsupported();
            }
            let mut res = vec![Some(gx)];
            res.resize(p.len(), None);
            Ok(res)
        }
        _ => unsupported(),
    }
}
