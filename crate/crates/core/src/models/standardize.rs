use serde::{Deserialize, Serialize};

use super::FeatureMatrix;

/// Per-column z-scoring with training statistics. Constant columns get a
/// unit scale so they map to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &FeatureMatrix) -> Self {
        let d = x.n_cols();
        let n = x.n_rows.max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in 0..x.n_rows {
            for (m, v) in mean.iter_mut().zip(x.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in 0..x.n_rows {
            for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var.iter().map(|s| (s / n).sqrt()).map(|s| if s > 1e-12 { s } else { 1.0 }).collect();
        Standardizer { mean, scale }
    }

    pub fn apply_row(&self, row: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(row).zip(&self.mean).zip(&self.scale) {
            *o = (v - m) / s;
        }
    }

    /// Row-major standardized copy.
    pub fn transform(&self, x: &FeatureMatrix) -> Vec<f64> {
        let d = x.n_cols();
        let mut out = vec![0.0; x.data.len()];
        for r in 0..x.n_rows {
            self.apply_row(x.row(r), &mut out[r * d..(r + 1) * d]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mean_unit_variance() {
        let x = FeatureMatrix::new(vec!["a".into(), "c".into()], vec![1.0, 5.0, 3.0, 5.0], vec![true, false]).unwrap();
        let s = Standardizer::fit(&x);
        assert_eq!(s.mean, [2.0, 5.0]);
        assert_eq!(s.scale, [1.0, 1.0]);
        assert_eq!(s.transform(&x), [-1.0, 0.0, 1.0, 0.0]);
    }
}
