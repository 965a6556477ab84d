//! L2-regularized logistic regression fitted by damped Newton iterations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::standardize::Standardizer;
use super::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrConfig {
    /// Inverse regularization strength.
    pub c: f64,
    pub max_iter: usize,
    /// Stop when the infinity norm of the per-sample gradient (objective
    /// divided by the row count) falls below this.
    pub tol: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig { c: 1.0, max_iter: 100, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub standardizer: Standardizer,
    /// Coefficients on standardized inputs.
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Objective `sum_i logloss_i + ||w||^2 / (2C)` and its gradient, for
/// parameters `[w..., b]` on a row-major design `x` with `d` columns.
/// The intercept `b` is not penalized.
pub fn lr_objective(params: &[f64], x: &[f64], y: &[f64], d: usize, c: f64) -> (f64, Vec<f64>) {
    let (w, b) = (&params[..d], params[d]);
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for (row, &yi) in x.chunks_exact(d).zip(y) {
        let z = b + row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
        loss += softplus(z) - yi * z;
        let r = sigmoid(z) - yi;
        for (g, a) in grad.iter_mut().zip(row) {
            *g += r * a;
        }
        grad[d] += r;
    }
    for (g, wj) in grad.iter_mut().zip(w) {
        *g += wj / c;
    }
    loss += w.iter().map(|v| v * v).sum::<f64>() / (2.0 * c);
    (loss, grad)
}

pub fn train_lr(x: &FeatureMatrix, cfg: &LrConfig) -> Result<LrModel> {
    let standardizer = Standardizer::fit(x);
    let xs = standardizer.transform(x);
    let y = x.y();
    let d = x.n_cols();
    let p = d + 1;
    let mut params = vec![0.0; p];
    let (mut f, mut g) = lr_objective(&params, &xs, &y, d, cfg.c);
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        if !f.is_finite() {
            return Err(Error::NonFiniteLoss { model: "LR", iteration: iterations });
        }
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (x.n_rows.max(1) as f64) < cfg.tol {
            break;
        }
        iterations += 1;

        // Hessian: X' S X + I/C on the weights, augmented with the intercept.
        let mut h = DMatrix::<f64>::zeros(p, p);
        let mut aug = vec![0.0; p];
        for row in xs.chunks_exact(d) {
            let z = params[d] + row.iter().zip(&params[..d]).map(|(a, b)| a * b).sum::<f64>();
            let pr = sigmoid(z);
            let s = pr * (1.0 - pr);
            if s == 0.0 {
                continue;
            }
            aug[..d].copy_from_slice(row);
            aug[d] = 1.0;
            for i in 0..p {
                let si = s * aug[i];
                for j in 0..=i {
                    h[(i, j)] += si * aug[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                h[(j, i)] = h[(i, j)];
            }
            h[(i, i)] += if i < d { 1.0 / cfg.c } else { 1e-10 };
        }
        let gv = DVector::from_vec(g.clone());
        let step = match h.cholesky() {
            Some(ch) => ch.solve(&gv),
            None => gv.clone(),
        };

        // Backtracking line search on the Armijo condition.
        let slope: f64 = step.iter().zip(&g).map(|(s, g)| s * g).sum();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            let (ft, gt) = lr_objective(&trial, &xs, &y, d, cfg.c);
            if ft.is_finite() && ft <= f - 1e-4 * t * slope {
                if ft == f {
                    // Below rounding: no further progress possible.
                    break;
                }
                params = trial;
                f = ft;
                g = gt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !f.is_finite() {
        return Err(Error::NonFiniteLoss { model: "LR", iteration: iterations });
    }
    let intercept = params.pop().expect("intercept");
    Ok(LrModel { standardizer, coef: params, intercept, iterations })
}

impl LrModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let z: f64 = row
            .iter()
            .zip(&self.standardizer.mean)
            .zip(&self.standardizer.scale)
            .zip(&self.coef)
            .map(|(((v, m), s), w)| (v - m) / s * w)
            .sum();
        sigmoid(self.intercept + z)
    }
}
