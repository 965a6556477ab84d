//! Gradient boosting of shallow regression trees on the logistic loss.

use serde::{Deserialize, Serialize};

use super::lr::{sigmoid, softplus};
use super::tree::{build_newton_tree, BinnedData, Binner, Tree};
use super::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbConfig {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub max_bins: usize,
}

impl Default for GbConfig {
    fn default() -> Self {
        GbConfig { n_stages: 100, learning_rate: 0.1, max_depth: 3, max_bins: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbModel {
    /// Log-odds of the training base rate.
    pub init: f64,
    /// Leaf values already include the shrinkage.
    pub trees: Vec<Tree>,
    /// Mean training deviance before stage 1 and after every stage.
    pub deviance: Vec<f64>,
}

fn mean_deviance(f: &[f64], y: &[f64]) -> f64 {
    f.iter().zip(y).map(|(&f, &y)| softplus(f) - y * f).sum::<f64>() / f.len() as f64
}

/// Each stage fits a depth-limited tree to the residuals `y - p` and sets
/// leaf values by one Newton step. If the shrunken step would raise the
/// training deviance, the step is halved until it does not (and dropped
/// after 40 halvings), so the deviance trace never increases.
pub fn train_gb(x: &FeatureMatrix, cfg: &GbConfig) -> Result<GbModel> {
    let n = x.n_rows;
    let y = x.y();
    let base = y.iter().sum::<f64>() / n as f64;
    let init = (base / (1.0 - base)).ln();
    let binner = Binner::fit(x, cfg.max_bins);
    let bins = binner.transform(x);
    let data = BinnedData { binner: &binner, bins: &bins, n_rows: n };

    let mut f = vec![init; n];
    let mut dev = mean_deviance(&f, &y);
    let mut deviance = vec![dev];
    let mut trees = Vec::with_capacity(cfg.n_stages);
    let mut resid = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trial = vec![0.0; n];
    for stage in 0..cfg.n_stages {
        for i in 0..n {
            let p = sigmoid(f[i]);
            resid[i] = y[i] - p;
            hess[i] = p * (1.0 - p);
        }
        let (mut tree, leaf_of) = build_newton_tree(&data, &resid, &hess, cfg.max_depth);
        let mut step = cfg.learning_rate;
        let mut accepted = false;
        for _ in 0..40 {
            for i in 0..n {
                trial[i] = f[i] + step * tree.nodes[leaf_of[i] as usize].value;
            }
            let d = mean_deviance(&trial, &y);
            if !d.is_finite() {
                return Err(Error::NonFiniteLoss { model: "GB", iteration: stage });
            }
            if d <= dev {
                std::mem::swap(&mut f, &mut trial);
                dev = d;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            step = 0.0;
        }
        for node in &mut tree.nodes {
            node.value *= step;
        }
        deviance.push(dev);
        trees.push(tree);
    }
    Ok(GbModel { init, trees, deviance })
}

impl GbModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.init + self.trees.iter().map(|t| t.predict(row)).sum::<f64>())
    }
}
