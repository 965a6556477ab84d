//! Random forest of Gini trees on bootstrap resamples.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{build_class_tree, BinnedData, Binner, ClassTreeParams, Tree};
use super::FeatureMatrix;
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub max_bins: usize,
    /// Features tried per node; `None` means ceil(sqrt(d)).
    pub max_features: Option<usize>,
}

impl Default for RfConfig {
    fn default() -> Self {
        RfConfig { n_trees: 100, max_depth: 32, max_bins: 256, max_features: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub trees: Vec<Tree>,
    /// Mean impurity decrease per feature, normalized to sum to 1.
    pub importances: Vec<f64>,
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

/// Trees are grown in parallel; tree `t` draws from its own stream derived
/// from `seed`, so the forest does not depend on the thread count.
pub fn train_rf(x: &FeatureMatrix, cfg: &RfConfig, seed: u64) -> RfModel {
    let d = x.n_cols();
    let n = x.n_rows;
    let binner = Binner::fit(x, cfg.max_bins);
    let bins = binner.transform(x);
    let data = BinnedData { binner: &binner, bins: &bins, n_rows: n };
    let max_features = cfg.max_features.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize).clamp(1, d);
    let params = ClassTreeParams { max_depth: cfg.max_depth, max_features };

    let grown: Vec<(Tree, Vec<f64>)> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from(seed, "rf-tree", t as u64);
            let mut weights = vec![0u32; n];
            for _ in 0..n {
                weights[rng.random_range(0..n)] += 1;
            }
            let (tree, mut imp) = build_class_tree(&data, &x.labels, &weights, &params, &mut rng);
            normalize(&mut imp);
            (tree, imp)
        })
        .collect();

    let mut importances = vec![0.0; d];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, imp) in grown {
        importances.iter_mut().zip(&imp).for_each(|(a, b)| *a += b);
        trees.push(tree);
    }
    normalize(&mut importances);
    RfModel { trees, importances }
}

impl RfModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let s: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        s / self.trees.len().max(1) as f64
    }
}
