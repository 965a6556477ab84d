use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Frame;
use crate::error::{Error, Result};

pub const DEFAULT_CLEANING: &str = include_str!("../../data/cleaning.toml");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub outer_low: f64,
    pub outer_high: f64,
    pub inner_low: f64,
    pub inner_high: f64,
}

impl Bounds {
    pub fn new(outer: [f64; 2], inner: [f64; 2]) -> Result<Self> {
        let b = Bounds { outer_low: outer[0], outer_high: outer[1], inner_low: inner[0], inner_high: inner[1] };
        let ordered = b.outer_low <= b.inner_low && b.inner_low <= b.inner_high && b.inner_high <= b.outer_high;
        if !ordered || [outer[0], outer[1], inner[0], inner[1]].iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("bounds outer {outer:?} inner {inner:?} are not nested")));
        }
        Ok(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub columns: Vec<String>,
    pub outer: [f64; 2],
    pub inner: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleaningConfig {
    pub variables: BTreeMap<String, VariableSpec>,
    by_column: BTreeMap<String, Bounds>,
}

impl CleaningConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let variables: BTreeMap<String, VariableSpec> =
            toml::from_str(text).map_err(|e| Error::Config(format!("cleaning config: {e}")))?;
        let mut by_column = BTreeMap::new();
        for (name, spec) in &variables {
            let b = Bounds::new(spec.outer, spec.inner).map_err(|e| Error::Config(format!("{name}: {e}")))?;
            for col in &spec.columns {
                if by_column.insert(col.clone(), b).is_some() {
                    return Err(Error::Config(format!("column `{col}` has two cleaning rules")));
                }
            }
        }
        Ok(CleaningConfig { variables, by_column })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn bounds_for_column(&self, column: &str) -> Option<Bounds> {
        self.by_column.get(column).copied()
    }

    /// Bounds by base variable name ("heartrate").
    pub fn bounds(&self, variable: &str) -> Option<Bounds> {
        let spec = self.variables.get(variable)?;
        Bounds::new(spec.outer, spec.inner).ok()
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, Bounds)> {
        self.by_column.iter().map(|(c, b)| (c.as_str(), *b))
    }
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULT_CLEANING).expect("bundled cleaning config is valid")
    }
}

/// NaN (missing) outside the outer bounds, clamped into the inner bounds,
/// otherwise unchanged. Missing stays missing.
pub fn clean_value(value: f64, b: Bounds) -> f64 {
    if value.is_nan() || value < b.outer_low || value > b.outer_high {
        f64::NAN
    } else {
        value.clamp(b.inner_low, b.inner_high)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CleaningReport {
    /// Per column: (values set to missing, values clamped).
    pub per_column: BTreeMap<String, (usize, usize)>,
}

/// Clean every configured column present in `frame`, in place.
pub fn clean_frame(frame: &mut Frame, cfg: &CleaningConfig) -> CleaningReport {
    let mut report = CleaningReport::default();
    for (name, col) in frame.columns_mut() {
        let Some(b) = cfg.bounds_for_column(name) else {
            continue;
        };
        let (mut removed, mut clamped) = (0, 0);
        for v in col.iter_mut() {
            if v.is_nan() {
                continue;
            }
            let c = clean_value(*v, b);
            if c.is_nan() {
                removed += 1;
            } else if c != *v {
                clamped += 1;
            }
            *v = c;
        }
        report.per_column.insert(name.to_string(), (removed, clamped));
    }
    report
}
