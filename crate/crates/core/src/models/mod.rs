//! Learned baselines: logistic regression, random forest, gradient
//! boosting and a small neural network, behind one serializable handle.

mod features;
pub mod gb;
pub mod lr;
pub mod mlp;
pub mod rf;
mod standardize;
pub mod tree;

use std::fmt;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use features::{fingerprint, FeatureMatrix, Manifest, Provenance, TimePoint};
pub use gb::{GbConfig, GbModel};
pub use lr::{LrConfig, LrModel};
pub use mlp::{MlpConfig, MlpModel};
pub use rf::{RfConfig, RfModel};
pub use standardize::Standardizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "LR")]
    Lr,
    #[serde(rename = "RF")]
    Rf,
    #[serde(rename = "GB")]
    Gb,
    #[serde(rename = "MLP")]
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Lr, ModelKind::Rf, ModelKind::Gb, ModelKind::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lr => "LR",
            ModelKind::Rf => "RF",
            ModelKind::Gb => "GB",
            ModelKind::Mlp => "MLP",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub lr: LrConfig,
    pub rf: RfConfig,
    pub gb: GbConfig,
    pub mlp: MlpConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelParams {
    Lr(LrModel),
    Rf(RfModel),
    Gb(GbModel),
    Mlp(MlpModel),
    /// Training labels held a single class; predicts that class's rate.
    Constant { probability: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub seed: u64,
    pub config: ModelConfig,
    pub manifest: Vec<String>,
    pub fingerprint: String,
    pub params: ModelParams,
    /// Wall-clock training time; kept out of the serialized model so saved
    /// models are reproducible byte for byte.
    #[serde(skip)]
    pub train_seconds: f64,
}

pub fn train(kind: ModelKind, x: &FeatureMatrix, cfg: &ModelConfig, seed: u64) -> Result<TrainedModel> {
    if x.n_rows == 0 {
        return Err(Error::Data("cannot train on an empty matrix".into()));
    }
    let start = Instant::now();
    let n_pos = x.labels.iter().filter(|&&b| b).count();
    let params = if n_pos == 0 || n_pos == x.n_rows {
        log::warn!("{kind}: training labels contain one class only; fitting a constant model");
        ModelParams::Constant { probability: n_pos as f64 / x.n_rows as f64 }
    } else {
        match kind {
            ModelKind::Lr => ModelParams::Lr(lr::train_lr(x, &cfg.lr)?),
            ModelKind::Rf => ModelParams::Rf(rf::train_rf(x, &cfg.rf, seed)),
            ModelKind::Gb => ModelParams::Gb(gb::train_gb(x, &cfg.gb)?),
            ModelKind::Mlp => ModelParams::Mlp(mlp::train_mlp(x, &cfg.mlp, seed)?),
        }
    };
    Ok(TrainedModel {
        kind,
        seed,
        config: *cfg,
        manifest: x.names.clone(),
        fingerprint: x.fingerprint(),
        params,
        train_seconds: start.elapsed().as_secs_f64(),
    })
}

impl TrainedModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.params {
            ModelParams::Lr(m) => m.predict_row(row),
            ModelParams::Rf(m) => m.predict_row(row),
            ModelParams::Gb(m) => m.predict_row(row),
            ModelParams::Mlp(m) => m.predict_row(row),
            ModelParams::Constant { probability } => *probability,
        }
    }

    /// Positive-class probabilities; the matrix columns must be exactly
    /// the training manifest.
    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        let actual = x.fingerprint();
        if actual != self.fingerprint || x.names != self.manifest {
            return Err(Error::ManifestMismatch { expected: self.fingerprint.clone(), actual });
        }
        Ok((0..x.n_rows).map(|r| self.predict_row(x.row(r))).collect())
    }

    /// Forest importances paired with feature names, largest first; ties
    /// keep manifest order.
    pub fn rf_variable_importance(&self) -> Result<Vec<(String, f64)>> {
        let ModelParams::Rf(m) = &self.params else {
            return Err(Error::WrongKind(format!("variable importance needs RF, model is {}", self.kind)));
        };
        let mut out: Vec<(String, f64)> = self.manifest.iter().cloned().zip(m.importances.iter().copied()).collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1));
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str, path: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse { path: path.into(), message: e.to_string() })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }
}
