//! Column-oriented numeric table keyed by ED stay.
//!
//! This is the common currency after the master dataset is built: cleaning,
//! splitting, imputation and feature extraction all read and write frames.
//! Missing cells are NaN.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Columns kept as identifiers rather than values.
pub const KEY_COLUMNS: [&str; 2] = ["subject_id", "stay_id"];
/// Non-numeric master columns that frames skip on read.
pub const SKIPPED_COLUMNS: [&str; 3] = ["hadm_id", "intime", "outtime"];

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub subject_id: Vec<i64>,
    pub stay_id: Vec<i64>,
    names: Vec<String>,
    index: HashMap<String, usize>,
    /// Column-major values.
    columns: Vec<Vec<f64>>,
}

impl Frame {
    pub fn new(subject_id: Vec<i64>, stay_id: Vec<i64>) -> Self {
        assert_eq!(subject_id.len(), stay_id.len());
        Frame { subject_id, stay_id, names: Vec::new(), index: HashMap::new(), columns: Vec::new() }
    }

    pub fn n_rows(&self) -> usize {
        self.stay_id.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.n_rows() {
            return Err(Error::Data(format!("column `{name}` has {} rows, frame has {}", values.len(), self.n_rows())));
        }
        if self.index.contains_key(&name) {
            return Err(Error::Data(format!("column `{name}` appears twice")));
        }
        self.index.insert(name.clone(), self.names.len());
        self.names.push(name);
        self.columns.push(values);
        Ok(())
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.position(name).map(|i| self.columns[i].as_slice())
    }

    pub fn require(&self, name: &str) -> Result<&[f64]> {
        self.column(name).ok_or_else(|| Error::MissingColumn { path: "frame".into(), column: name.into() })
    }

    pub fn column_mut(&mut self, name: &str) -> Option<&mut Vec<f64>> {
        let i = self.position(name)?;
        Some(&mut self.columns[i])
    }

    pub fn column_at(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    pub fn columns_mut(&mut self) -> impl Iterator<Item = (&str, &mut Vec<f64>)> {
        self.names.iter().map(String::as_str).zip(self.columns.iter_mut())
    }

    /// Rows at `rows`, in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Frame {
        Frame {
            subject_id: rows.iter().map(|&r| self.subject_id[r]).collect(),
            stay_id: rows.iter().map(|&r| self.stay_id[r]).collect(),
            names: self.names.clone(),
            index: self.index.clone(),
            columns: self.columns.iter().map(|c| rows.iter().map(|&r| c[r]).collect()).collect(),
        }
    }

    pub fn filter_rows(&self, keep: impl Fn(usize) -> bool) -> Frame {
        let rows: Vec<usize> = (0..self.n_rows()).filter(|&r| keep(r)).collect();
        self.select_rows(&rows)
    }

    /// Canonical row order: ascending stay_id.
    pub fn sorted_by_stay(&self) -> Frame {
        let mut rows: Vec<usize> = (0..self.n_rows()).collect();
        rows.sort_by_key(|&r| self.stay_id[r]);
        self.select_rows(&rows)
    }

    /// Row-major copy of the named columns.
    pub fn matrix(&self, names: &[String]) -> Result<Vec<f64>> {
        let cols: Vec<&[f64]> = names.iter().map(|n| self.require(n)).collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(self.n_rows() * cols.len());
        for r in 0..self.n_rows() {
            out.extend(cols.iter().map(|c| c[r]));
        }
        Ok(out)
    }

    pub fn count_missing(&self, names: &[String]) -> Result<usize> {
        let mut n = 0;
        for name in names {
            n += self.require(name)?.iter().filter(|v| v.is_nan()).count();
        }
        Ok(n)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |source| Error::Csv { path: "frame".into(), source };
        let mut header = vec!["subject_id".to_string(), "stay_id".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header).map_err(err)?;
        let mut row = Vec::with_capacity(header.len());
        for r in 0..self.n_rows() {
            row.clear();
            row.push(self.subject_id[r].to_string());
            row.push(self.stay_id[r].to_string());
            row.extend(self.columns.iter().map(|c| format_cell(c[r])));
            w.write_record(&row).map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("frame", e))?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Read a frame written by [`Frame::write_csv`] or a master dataset file.
    /// `gender` is read as F=0, M=1; empty cells are missing.
    pub fn read_csv<R: Read>(input: R, name: &str) -> Result<Frame> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let err = |source| Error::Csv { path: name.into(), source };
        let header = rdr.headers().map_err(err)?.clone();
        let pos = |col: &str| {
            header
                .iter()
                .position(|h| h == col)
                .ok_or_else(|| Error::MissingColumn { path: name.into(), column: col.into() })
        };
        let (subject_pos, stay_pos) = (pos("subject_id")?, pos("stay_id")?);
        let value_cols: Vec<(usize, String)> = header
            .iter()
            .enumerate()
            .filter(|(_, h)| !KEY_COLUMNS.contains(h) && !SKIPPED_COLUMNS.contains(h))
            .map(|(i, h)| (i, h.to_string()))
            .collect();

        let mut subject_id = Vec::new();
        let mut stay_id = Vec::new();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); value_cols.len()];
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(err)?;
            let line = row as u64 + 2;
            let id = |i: usize| {
                rec[i].trim().parse::<i64>().map_err(|_| Error::MalformedRow {
                    path: name.into(),
                    row: line,
                    reason: format!("bad identifier `{}`", &rec[i]),
                })
            };
            subject_id.push(id(subject_pos)?);
            stay_id.push(id(stay_pos)?);
            for ((i, col), out) in value_cols.iter().zip(columns.iter_mut()) {
                out.push(parse_cell(col, rec[*i].trim()).ok_or_else(|| Error::MalformedRow {
                    path: name.into(),
                    row: line,
                    reason: format!("bad value `{}` in `{col}`", &rec[*i]),
                })?);
            }
        }
        let mut frame = Frame::new(subject_id, stay_id);
        for ((_, col), values) in value_cols.into_iter().zip(columns) {
            frame.push_column(col, values)?;
        }
        Ok(frame)
    }

    pub fn read_csv_path(path: &Path) -> Result<Frame> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), &path.display().to_string())
    }
}

fn parse_cell(column: &str, text: &str) -> Option<f64> {
    if text.is_empty() {
        return Some(f64::NAN);
    }
    if column == "gender" {
        match text {
            "F" => return Some(0.0),
            "M" => return Some(1.0),
            _ => {}
        }
    }
    text.parse().ok()
}

/// Shortest round-trip decimal; missing is an empty cell.
pub fn format_cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}
