//! One-hidden-layer ReLU network trained with Adam on the logistic loss.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::lr::{sigmoid, softplus};
use super::standardize::Standardizer;
use super::FeatureMatrix;
use crate::error::{Error, Result};
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// L2 penalty on the weights, per sample.
    pub alpha: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 200,
            epochs: 20,
            alpha: 1e-4,
        }
    }
}

/// Flat parameters: `w1` (hidden x d, row-major), `b1` (hidden), `w2`
/// (hidden), then the output bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub standardizer: Standardizer,
    pub hidden: usize,
    pub params: Vec<f64>,
    /// Mean training loss after each epoch.
    pub loss_curve: Vec<f64>,
}

pub fn n_params(d: usize, hidden: usize) -> usize {
    hidden * d + 2 * hidden + 1
}

fn forward(params: &[f64], row: &[f64], hidden: usize, act: &mut [f64]) -> f64 {
    let d = row.len();
    let (w1, rest) = params.split_at(hidden * d);
    let (b1, rest) = rest.split_at(hidden);
    let (w2, b2) = rest.split_at(hidden);
    let mut z = b2[0];
    for j in 0..hidden {
        let pre = b1[j] + w1[j * d..(j + 1) * d].iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
        act[j] = pre.max(0.0);
        z += w2[j] * act[j];
    }
    z
}

/// Mean logistic loss plus `alpha / (2n) * ||W||^2` over the rows of `x`,
/// and its gradient with respect to `params`.
pub fn mlp_loss_and_grad(params: &[f64], x: &[f64], y: &[f64], d: usize, hidden: usize, alpha: f64) -> (f64, Vec<f64>) {
    let n = y.len() as f64;
    let mut grad = vec![0.0; params.len()];
    let mut act = vec![0.0; hidden];
    let mut loss = 0.0;
    let w2_off = hidden * d + hidden;
    for (row, &yi) in x.chunks_exact(d).zip(y) {
        let z = forward(params, row, hidden, &mut act);
        loss += softplus(z) - yi * z;
        let dz = (sigmoid(z) - yi) / n;
        grad[w2_off + hidden] += dz;
        for j in 0..hidden {
            grad[w2_off + j] += dz * act[j];
            if act[j] > 0.0 {
                let dh = dz * params[w2_off + j];
                grad[hidden * d + j] += dh;
                for (g, v) in grad[j * d..(j + 1) * d].iter_mut().zip(row) {
                    *g += dh * v;
                }
            }
        }
    }
    loss /= n;
    let mut penalty = 0.0;
    for i in (0..hidden * d).chain(w2_off..w2_off + hidden) {
        penalty += params[i] * params[i];
        grad[i] += alpha / n * params[i];
    }
    loss += alpha / (2.0 * n) * penalty;
    (loss, grad)
}

pub fn train_mlp(x: &FeatureMatrix, cfg: &MlpConfig, seed: u64) -> Result<MlpModel> {
    let standardizer = Standardizer::fit(x);
    let xs = standardizer.transform(x);
    let y = x.y();
    let (n, d, h) = (x.n_rows, x.n_cols(), cfg.hidden);

    let mut init = rng_from(seed, "mlp-init", 0);
    let mut params = vec![0.0; n_params(d, h)];
    let lim1 = (6.0 / d as f64).sqrt();
    for p in &mut params[..h * d] {
        *p = init.random_range(-lim1..lim1);
    }
    let lim2 = (6.0 / h as f64).sqrt();
    for p in &mut params[h * d + h..h * d + 2 * h] {
        *p = init.random_range(-lim2..lim2);
    }

    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let mut t = 0i32;
    let mut order: Vec<usize> = (0..n).collect();
    let mut bx = Vec::with_capacity(cfg.batch_size * d);
    let mut by = Vec::with_capacity(cfg.batch_size);
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng_from(seed, "mlp-epoch", epoch as u64));
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size.max(1)) {
            bx.clear();
            by.clear();
            for &r in batch {
                bx.extend_from_slice(&xs[r * d..(r + 1) * d]);
                by.push(y[r]);
            }
            let (loss, grad) = mlp_loss_and_grad(&params, &bx, &by, d, h, cfg.alpha);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { model: "MLP", iteration: epoch });
            }
            total += loss * batch.len() as f64;
            t += 1;
            let c1 = 1.0 - cfg.beta1.powi(t);
            let c2 = 1.0 - cfg.beta2.powi(t);
            for i in 0..params.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
                params[i] -= cfg.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + cfg.epsilon);
            }
        }
        loss_curve.push(total / n as f64);
    }
    Ok(MlpModel { standardizer, hidden: h, params, loss_curve })
}

impl MlpModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut z = vec![0.0; row.len()];
        self.standardizer.apply_row(row, &mut z);
        let mut act = vec![0.0; self.hidden];
        sigmoid(forward(&self.params, &z, self.hidden, &mut act))
    }
}
