use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::Frame;
use crate::error::{Error, Result};

pub const TRIAGE_MANIFEST: &str = include_str!("../../data/manifests/triage.toml");
pub const DISPOSITION_MANIFEST: &str = include_str!("../../data/manifests/disposition.toml");

/// When during the visit a prediction is made; picks the feature manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimePoint {
    Triage,
    Disposition,
}

impl TimePoint {
    pub fn as_str(self) -> &'static str {
        match self {
            TimePoint::Triage => "triage",
            TimePoint::Disposition => "disposition",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "triage" => Some(TimePoint::Triage),
            "disposition" => Some(TimePoint::Disposition),
            _ => None,
        }
    }
}

/// Ordered list of model input columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub columns: Vec<String>,
}

impl Manifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        let m: Manifest = toml::from_str(text).map_err(|e| Error::Config(format!("feature manifest: {e}")))?;
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = m.columns.iter().find(|c| !seen.insert(c.as_str())) {
            return Err(Error::Config(format!("manifest {}: column `{dup}` listed twice", m.name)));
        }
        if m.columns.is_empty() {
            return Err(Error::Config(format!("manifest {} is empty", m.name)));
        }
        Ok(m)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn default_for(time_point: TimePoint) -> Self {
        let text = match time_point {
            TimePoint::Triage => TRIAGE_MANIFEST,
            TimePoint::Disposition => DISPOSITION_MANIFEST,
        };
        Self::from_toml(text).expect("bundled manifest is valid")
    }

    /// Short hash of the ordered column list.
    pub fn fingerprint(&self) -> String {
        fingerprint(&self.columns)
    }
}

pub fn fingerprint(columns: &[String]) -> String {
    let mut h = Sha256::new();
    for c in columns {
        h.update(c.as_bytes());
        h.update(b"\n");
    }
    hex::encode(&h.finalize()[..8])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub task: String,
    pub time_point: TimePoint,
    pub split: String,
}

/// Dense row-major design matrix with labels, the input to every trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub n_rows: usize,
    pub data: Vec<f64>,
    pub labels: Vec<bool>,
    pub provenance: Option<Provenance>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, data: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        let n_cols = names.len();
        if n_cols == 0 || data.len() != labels.len() * n_cols {
            return Err(Error::Data(format!(
                "matrix has {} cells for {} rows x {n_cols} columns",
                data.len(),
                labels.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("missing or non-finite cell in column `{}`", names[i % n_cols])));
        }
        Ok(FeatureMatrix { names, n_rows: labels.len(), data, labels, provenance: None })
    }

    /// Select `manifest` columns and the `outcome` label from an imputed
    /// frame.
    pub fn from_frame(frame: &Frame, manifest: &Manifest, outcome: &str) -> Result<Self> {
        let data = frame.matrix(&manifest.columns)?;
        let labels = frame.require(outcome)?.iter().map(|&v| v == 1.0).collect();
        Self::new(manifest.columns.clone(), data, labels)
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let d = self.n_cols();
        &self.data[r * d..(r + 1) * d]
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(c).step_by(self.n_cols()).copied()
    }

    pub fn y(&self) -> Vec<f64> {
        self.labels.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(&self.names)
    }
}
