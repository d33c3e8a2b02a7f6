//! Two-layer graph convolutional classifier with a leading 1×1 transform.
//!
//! ```text
//! H0 = relu(X·Θ)
//! Z1 = A′·H0·W0,   H1 = relu(Z1)
//! Z2 = A′·H1·W1,   P  = softmax(Z2)      (row-wise)
//! ```
//!
//! The loss is the summed cross-entropy over the masked (labeled) nodes.
//! Gradients are derived by hand; `A′` is symmetric so it appears untransposed
//! in the backward pass.

use alloc::vec::Vec;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::linalg::Matrix;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcnDims {
    pub features: usize,
    pub conv: usize,
    pub hidden: usize,
    pub classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnModel {
    pub dims: GcnDims,
    /// `F × d_c`
    pub theta: Matrix,
    /// `d_c × d_h`
    pub w0: Matrix,
    /// `d_h × C`
    pub w1: Matrix,
}

impl GcnModel {
    pub fn zeros(dims: GcnDims) -> Self {
        Self {
            dims,
            theta: Matrix::zeros(dims.features, dims.conv),
            w0: Matrix::zeros(dims.conv, dims.hidden),
            w1: Matrix::zeros(dims.hidden, dims.classes),
        }
    }

    pub fn params(&self) -> [&Matrix; 3] {
        [&self.theta, &self.w0, &self.w1]
    }

    pub fn params_mut(&mut self) -> [&mut Matrix; 3] {
        [&mut self.theta, &mut self.w0, &mut self.w1]
    }
}

/// Glorot-uniform initialisation, `U(±sqrt(6/(fan_in + fan_out)))`.
pub fn init_model(dims: GcnDims, seed: u64) -> Result<GcnModel> {
    if dims.features == 0 || dims.conv == 0 || dims.hidden == 0 || dims.classes == 0 {
        return Err(Error::InvalidParameter("model dimensions must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = GcnModel::zeros(dims);
    for m in model.params_mut() {
        let bound = math::sqrt(6.0 / (m.rows() + m.cols()) as f64);
        let dist = Uniform::new_inclusive(-bound, bound);
        for v in m.as_mut_slice() {
            *v = dist.sample(&mut rng);
        }
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    /// `X·Θ` before the activation.
    pub pre0: Matrix,
    pub h0: Matrix,
    pub z1: Matrix,
    pub h1: Matrix,
    pub z2: Matrix,
    pub probs: Matrix,
    /// Row-wise `ln P`, computed stably from `Z2`.
    pub log_probs: Matrix,
}

impl ForwardCache {
    /// Predicted class id (1-based) per node; ties go to the smallest id.
    pub fn predictions(&self) -> Vec<u16> {
        argmax_rows(&self.probs)
    }
}

pub fn argmax_rows(m: &Matrix) -> Vec<u16> {
    (0..m.rows())
        .map(|i| {
            let row = m.row(i);
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best as u16 + 1
        })
        .collect()
}

fn relu(m: &Matrix) -> Matrix {
    m.map(|v| if v > 0.0 { v } else { 0.0 })
}

fn check(m: &Matrix, layer: &'static str) -> Result<()> {
    if m.all_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteLayer(layer))
    }
}

/// Row-wise log-softmax via log-sum-exp.
pub fn log_softmax(z: &Matrix) -> Matrix {
    let mut out = z.clone();
    for i in 0..z.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + math::ln(row.iter().map(|&v| math::exp(v - max)).sum::<f64>());
        for v in row {
            *v -= lse;
        }
    }
    out
}

pub fn forward(model: &GcnModel, adj: &NormalizedAdjacency, x: &Matrix) -> Result<ForwardCache> {
    if x.cols() != model.dims.features || x.rows() != adj.len() {
        return Err(Error::Shape(alloc::format!(
            "features {}x{} against model width {} and {} graph nodes",
            x.rows(),
            x.cols(),
            model.dims.features,
            adj.len()
        )));
    }
    let pre0 = x.matmul(&model.theta);
    check(&pre0, "conv1x1")?;
    let h0 = relu(&pre0);
    let z1 = adj.mul(&h0.matmul(&model.w0));
    check(&z1, "gcn1")?;
    let h1 = relu(&z1);
    let z2 = adj.mul(&h1.matmul(&model.w1));
    check(&z2, "gcn2")?;
    let log_probs = log_softmax(&z2);
    let probs = log_probs.map(math::exp);
    check(&probs, "softmax")?;
    Ok(ForwardCache {
        pre0,
        h0,
        z1,
        h1,
        z2,
        probs,
        log_probs,
    })
}

/// Summed cross-entropy `−Σ ln P[g, y_g]` over nodes with a nonzero label.
pub fn loss(cache: &ForwardCache, labels: &[u16]) -> Result<f64> {
    let mut total = 0.0;
    let mut any = false;
    for (i, &y) in labels.iter().enumerate() {
        if y != 0 {
            total -= cache.log_probs[(i, y as usize - 1)];
            any = true;
        }
    }
    if !any {
        return Err(Error::NoLabels("loss mask selects no node".into()));
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub theta: Matrix,
    pub w0: Matrix,
    pub w1: Matrix,
}

impl Gradients {
    pub fn as_array(&self) -> [&Matrix; 3] {
        [&self.theta, &self.w0, &self.w1]
    }
}

/// Exact gradients of [`loss`] with respect to `Θ`, `W0` and `W1`.
pub fn backward(
    cache: &ForwardCache,
    model: &GcnModel,
    adj: &NormalizedAdjacency,
    x: &Matrix,
    labels: &[u16],
) -> Gradients {
    let n = cache.probs.rows();
    let mut g2 = Matrix::zeros(n, model.dims.classes);
    for (i, &y) in labels.iter().enumerate() {
        if y == 0 {
            continue;
        }
        let row = g2.row_mut(i);
        row.copy_from_slice(cache.probs.row(i));
        row[y as usize - 1] -= 1.0;
    }
    // Z2 = A′·H1·W1
    let ag2 = adj.mul(&g2);
    let d_w1 = cache.h1.t_matmul(&ag2);
    let mut d_z1 = ag2.matmul_t(&model.w1);
    for (d, &z) in d_z1.as_mut_slice().iter_mut().zip(cache.z1.as_slice()) {
        if z <= 0.0 {
            *d = 0.0;
        }
    }
    // Z1 = A′·H0·W0
    let adz1 = adj.mul(&d_z1);
    let d_w0 = cache.h0.t_matmul(&adz1);
    let mut d_pre0 = adz1.matmul_t(&model.w0);
    for (d, &z) in d_pre0.as_mut_slice().iter_mut().zip(cache.pre0.as_slice()) {
        if z <= 0.0 {
            *d = 0.0;
        }
    }
    let d_theta = x.t_matmul(&d_pre0);
    Gradients {
        theta: d_theta,
        w0: d_w0,
        w1: d_w1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: [Matrix; 3],
    pub v: [Matrix; 3],
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(model: &GcnModel) -> Self {
        let zeros = |m: &Matrix| Matrix::zeros(m.rows(), m.cols());
        let [a, b, c] = model.params();
        Self {
            m: [zeros(a), zeros(b), zeros(c)],
            v: [zeros(a), zeros(b), zeros(c)],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(model: &mut GcnModel, grads: &Gradients, state: &mut AdamState, lr: f64) {
    state.t += 1;
    let t = state.t as f64;
    let bc1 = 1.0 - math::pow(state.beta1, t);
    let bc2 = 1.0 - math::pow(state.beta2, t);
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    for (k, (param, grad)) in model.params_mut().into_iter().zip(grads.as_array()).enumerate() {
        let m = state.m[k].as_mut_slice();
        let v = state.v[k].as_mut_slice();
        for (((p, &g), mi), vi) in param
            .as_mut_slice()
            .iter_mut()
            .zip(grad.as_slice())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *mi = b1 * *mi + (1.0 - b1) * g;
            *vi = b2 * *vi + (1.0 - b2) * g * g;
            let m_hat = *mi / bc1;
            let v_hat = *vi / bc2;
            *p -= lr * m_hat / (math::sqrt(v_hat) + eps);
        }
    }
}

/// Fraction of nodes with a nonzero label whose prediction matches it.
pub fn accuracy(predictions: &[u16], labels: &[u16]) -> Option<(usize, usize)> {
    let mut hit = 0;
    let mut total = 0;
    for (&p, &y) in predictions.iter().zip(labels) {
        if y != 0 {
            total += 1;
            hit += usize::from(p == y);
        }
    }
    (total > 0).then_some((hit, total))
}

/// Zero-mean, unit-variance columns (constant columns are only centred).
pub fn standardize_columns(x: &Matrix) -> Matrix {
    let (n, f) = x.shape();
    let mut out = x.clone();
    if n == 0 {
        return out;
    }
    for j in 0..f {
        let mean = (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (x[(i, j)] - mean) * (x[(i, j)] - mean)).sum::<f64>() / n as f64;
        let sd = math::sqrt(var);
        for i in 0..n {
            let c = x[(i, j)] - mean;
            out[(i, j)] = if sd > 0.0 { c / sd } else { c };
        }
    }
    out
}

pub fn zero_like(model: &GcnModel) -> Gradients {
    let [a, b, c] = model.params();
    Gradients {
        theta: Matrix::zeros(a.rows(), a.cols()),
        w0: Matrix::zeros(b.rows(), b.cols()),
        w1: Matrix::zeros(c.rows(), c.cols()),
    }
}
