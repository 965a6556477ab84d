//! Cohort characteristics: mean (SD) for continuous variables and
//! count (%) for binary ones, overall and within each outcome's positives.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::dataset::Frame;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryCell {
    /// Non-missing values.
    pub n: usize,
    pub mean: f64,
    /// Sample SD (n - 1 denominator); 0 with fewer than two values.
    pub sd: f64,
    /// Number of ones, for binary variables.
    pub count: usize,
}

impl SummaryCell {
    pub fn of(values: impl Iterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.filter(|x| !x.is_nan()).collect();
        let n = v.len();
        let mean = if n > 0 { v.iter().sum::<f64>() / n as f64 } else { f64::NAN };
        let sd = if n > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
        let count = v.iter().filter(|&&x| x == 1.0).count();
        SummaryCell { n, mean, sd, count }
    }

    pub fn format(&self, binary: bool) -> String {
        if self.n == 0 {
            String::new()
        } else if binary {
            format!("{} ({:.2}%)", self.count, 100.0 * self.count as f64 / self.n as f64)
        } else {
            format!("{:.2} ({:.2})", self.mean, self.sd)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub variable: String,
    pub binary: bool,
    /// Overall first, then one cell per stratum.
    pub cells: Vec<SummaryCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortSummary {
    pub strata: Vec<String>,
    /// Visits overall and per stratum.
    pub n_visits: Vec<usize>,
    pub rows: Vec<SummaryRow>,
}

/// Summarizes `variables` over all rows and over the rows where each
/// stratum column equals 1. A variable is binary when every observed value
/// is 0 or 1.
pub fn summarize_cohort(frame: &Frame, variables: &[String], strata: &[&str]) -> Result<CohortSummary> {
    let mut masks: Vec<Vec<bool>> = vec![vec![true; frame.n_rows()]];
    for s in strata {
        masks.push(frame.require(s)?.iter().map(|&v| v == 1.0).collect());
    }
    let n_visits = masks.iter().map(|m| m.iter().filter(|&&b| b).count()).collect();
    let rows = variables
        .iter()
        .map(|name| {
            let col = frame.require(name)?;
            let binary = col.iter().all(|&v| v.is_nan() || v == 0.0 || v == 1.0);
            let cells = masks
                .iter()
                .map(|m| SummaryCell::of(col.iter().zip(m).filter(|(_, &k)| k).map(|(&v, _)| v)))
                .collect();
            Ok(SummaryRow { variable: name.clone(), binary, cells })
        })
        .collect::<Result<_>>()?;
    Ok(CohortSummary { strata: strata.iter().map(|s| s.to_string()).collect(), n_visits, rows })
}

impl CohortSummary {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let wrap = |e: csv::Error| Error::Csv { path: "cohort summary".into(), source: e };
        let mut header = vec!["variable".to_string(), "overall".to_string()];
        header.extend(self.strata.iter().cloned());
        w.write_record(&header).map_err(wrap)?;
        let mut n = vec!["n_visits".to_string()];
        n.extend(self.n_visits.iter().map(|v| v.to_string()));
        w.write_record(&n).map_err(wrap)?;
        for row in &self.rows {
            let mut rec = vec![row.variable.clone()];
            rec.extend(row.cells.iter().map(|c| c.format(row.binary)));
            w.write_record(&rec).map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::io("cohort summary", e))
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_cells() {
        let mut f = Frame::new(vec![1, 2, 3], vec![1, 2, 3]);
        f.push_column("age", vec![20.0, 30.0, 40.0]).unwrap();
        f.push_column("flag", vec![1.0, 0.0, 1.0]).unwrap();
        f.push_column("k", vec![5.0, 5.0, f64::NAN]).unwrap();
        f.push_column("y", vec![1.0, 1.0, 0.0]).unwrap();
        let names: Vec<String> = ["age", "flag", "k"].map(String::from).to_vec();
        let s = summarize_cohort(&f, &names, &["y"]).unwrap();
        assert_eq!(s.n_visits, [3, 2]);
        assert_eq!(s.rows[0].cells[0].format(false), "30.00 (10.00)");
        assert_eq!(s.rows[0].cells[1].format(false), "25.00 (7.07)");
        assert!(s.rows[1].binary);
        assert_eq!(s.rows[1].cells[0].format(true), "2 (66.67%)");
        assert_eq!(s.rows[2].cells[0].sd, 0.0);
        assert_eq!(s.rows[2].cells[0].n, 2);
    }
}
