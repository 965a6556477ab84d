use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Frame;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum ImputeStrategy {
    #[default]
    Median,
    Mean,
    Constant(f64),
}

/// Per-column fill values learned from the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imputer {
    pub strategy: ImputeStrategy,
    pub fill: BTreeMap<String, f64>,
}

/// Median with the even-count convention: mean of the two middle values.
fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Fit fill values for `columns` on `train`. Statistics are computed on a
/// sorted copy of the observed values, so they do not depend on row order.
pub fn fit_imputer(train: &Frame, columns: &[String], strategy: ImputeStrategy) -> Result<Imputer> {
    let mut fill = BTreeMap::new();
    for name in columns {
        let mut observed: Vec<f64> = train.require(name)?.iter().copied().filter(|v| !v.is_nan()).collect();
        let value = match strategy {
            ImputeStrategy::Constant(c) => c,
            _ if observed.is_empty() => return Err(Error::AllMissingColumn(name.clone())),
            ImputeStrategy::Median => {
                observed.sort_by(f64::total_cmp);
                median(&observed)
            }
            ImputeStrategy::Mean => {
                observed.sort_by(f64::total_cmp);
                observed.iter().sum::<f64>() / observed.len() as f64
            }
        };
        if !value.is_finite() {
            return Err(Error::Config(format!("imputation value for `{name}` is not finite")));
        }
        fill.insert(name.clone(), value);
    }
    Ok(Imputer { strategy, fill })
}

impl Imputer {
    /// Fill every missing cell of the fitted columns; returns cells filled.
    pub fn apply(&self, frame: &mut Frame) -> Result<usize> {
        let mut filled = 0;
        for (name, &value) in &self.fill {
            let col = frame
                .column_mut(name)
                .ok_or_else(|| Error::MissingColumn { path: "frame".into(), column: name.clone() })?;
            for v in col.iter_mut().filter(|v| v.is_nan()) {
                *v = value;
                filled += 1;
            }
        }
        Ok(filled)
    }

    pub fn columns(&self) -> Vec<String> {
        self.fill.keys().cloned().collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Data(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.display().to_string(), message: e.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NAN: f64 = f64::NAN;

    fn frame(values: Vec<f64>) -> Frame {
        let n = values.len() as i64;
        let mut f = Frame::new((0..n).collect(), (0..n).collect());
        f.push_column("x", values).unwrap();
        f
    }

    fn cols() -> Vec<String> {
        vec!["x".into()]
    }

    #[test]
    fn median_odd_and_even() {
        let mut f = frame(vec![1.0, 2.0, 3.0, NAN]);
        let imp = fit_imputer(&f, &cols(), ImputeStrategy::Median).unwrap();
        assert_eq!(imp.fill["x"], 2.0);
        assert_eq!(imp.apply(&mut f).unwrap(), 1);
        assert_eq!(f.column("x").unwrap(), [1.0, 2.0, 3.0, 2.0]);

        let imp = fit_imputer(&frame(vec![4.0, 1.0, 3.0, 2.0]), &cols(), ImputeStrategy::Median).unwrap();
        assert_eq!(imp.fill["x"], 2.5);
    }

    #[test]
    fn mean_and_constant() {
        let f = frame(vec![1.0, 2.0, 6.0, NAN]);
        assert_eq!(fit_imputer(&f, &cols(), ImputeStrategy::Mean).unwrap().fill["x"], 3.0);
        assert_eq!(fit_imputer(&f, &cols(), ImputeStrategy::Constant(-1.0)).unwrap().fill["x"], -1.0);
    }

    #[test]
    fn test_rows_get_train_median() {
        let train = frame(vec![60.0, 70.0, 80.0]);
        let mut test = frame(vec![100.0, 110.0, NAN]);
        let imp = fit_imputer(&train, &cols(), ImputeStrategy::Median).unwrap();
        imp.apply(&mut test).unwrap();
        assert_eq!(test.column("x").unwrap()[2], 70.0);
    }

    #[test]
    fn all_missing_column_is_an_error() {
        let err = fit_imputer(&frame(vec![NAN, NAN]), &cols(), ImputeStrategy::Median).unwrap_err();
        assert!(matches!(err, Error::AllMissingColumn(c) if c == "x"));
    }

    #[test]
    fn json_round_trip() {
        let imp = fit_imputer(&frame(vec![1.0, 2.0]), &cols(), ImputeStrategy::Constant(0.5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("imputer.json");
        imp.save(&p).unwrap();
        assert_eq!(Imputer::load(&p).unwrap(), imp);
    }
}
