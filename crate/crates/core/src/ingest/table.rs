//! CSV reading and writing for the nine source tables.
//!
//! Column names follow the public MIMIC-IV-ED / MIMIC-IV schema. Extra
//! columns are ignored; required ones are enforced by header lookup.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::records::*;
use crate::error::{Error, Result};
use crate::issues::IssueLog;

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";
const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TableKind {
    EdStays,
    Triage,
    VitalSign,
    Patients,
    Admissions,
    IcuStays,
    Diagnoses,
    Medrecon,
    Pyxis,
}

impl TableKind {
    pub const ALL: [TableKind; 9] = [
        TableKind::EdStays,
        TableKind::Triage,
        TableKind::VitalSign,
        TableKind::Patients,
        TableKind::Admissions,
        TableKind::IcuStays,
        TableKind::Diagnoses,
        TableKind::Medrecon,
        TableKind::Pyxis,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            TableKind::EdStays => "edstays.csv",
            TableKind::Triage => "triage.csv",
            TableKind::VitalSign => "vitalsign.csv",
            TableKind::Patients => "patients.csv",
            TableKind::Admissions => "admissions.csv",
            TableKind::IcuStays => "icustays.csv",
            TableKind::Diagnoses => "diagnoses_icd.csv",
            TableKind::Medrecon => "medrecon.csv",
            TableKind::Pyxis => "pyxis.csv",
        }
    }

    /// Columns that must be present in the header.
    pub fn required_columns(self) -> &'static [&'static str] {
        match self {
            TableKind::EdStays => &["subject_id", "hadm_id", "stay_id", "intime", "outtime", "disposition"],
            TableKind::Triage => &[
                "stay_id",
                "temperature",
                "heartrate",
                "resprate",
                "o2sat",
                "sbp",
                "dbp",
                "pain",
                "acuity",
                "chiefcomplaint",
            ],
            TableKind::VitalSign => {
                &["stay_id", "charttime", "temperature", "heartrate", "resprate", "o2sat", "sbp", "dbp"]
            }
            TableKind::Patients => &["subject_id", "gender", "anchor_age", "anchor_year", "dod"],
            TableKind::Admissions => &["subject_id", "hadm_id", "admittime", "dischtime", "deathtime"],
            TableKind::IcuStays => &["subject_id", "hadm_id", "stay_id", "intime", "outtime"],
            TableKind::Diagnoses => &["subject_id", "hadm_id", "seq_num", "icd_code", "icd_version"],
            TableKind::Medrecon => &["stay_id", "name"],
            TableKind::Pyxis => &["stay_id", "charttime", "name"],
        }
    }

    fn is_root(self) -> bool {
        self == TableKind::EdStays
    }
}

/// Unit of raw temperature columns. Internal storage is always Celsius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemperatureUnit {
    #[default]
    Fahrenheit,
    Celsius,
}

pub fn convert_temperature(value: f64, unit: TemperatureUnit) -> f64 {
    match unit {
        TemperatureUnit::Fahrenheit => (value - 32.0) * 5.0 / 9.0,
        TemperatureUnit::Celsius => value,
    }
}

fn celsius_to(value: f64, unit: TemperatureUnit) -> f64 {
    match unit {
        TemperatureUnit::Fahrenheit => round6(value * 9.0 / 5.0 + 32.0),
        TemperatureUnit::Celsius => value,
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Pain is free text in the source; only integers 0..=10 are kept.
pub fn parse_pain(text: &str) -> Option<f64> {
    let t = text.trim();
    let v: f64 = t.parse().ok()?;
    (v.fract() == 0.0 && (0.0..=10.0).contains(&v)).then_some(v)
}

pub fn parse_timestamp(text: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(text.trim(), TIMESTAMP_FORMAT).ok()
}

fn parse_date(text: &str) -> Option<NaiveDate> {
    let t = text.trim();
    NaiveDate::parse_from_str(t, DATE_FORMAT)
        .ok()
        .or_else(|| parse_timestamp(t).map(|ts| ts.date()))
}

pub fn format_timestamp(ts: &NaiveDateTime) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

pub fn format_f64(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    pub temperature_unit: TemperatureUnit,
}

/// Header-indexed view of one data row, with typed accessors that log
/// unparseable cells as missing.
pub struct Row<'a> {
    record: &'a csv::StringRecord,
    columns: &'a HashMap<String, usize>,
    path: &'a str,
    line: u64,
    kind: TableKind,
    issues: &'a mut IssueLog,
}

impl<'a> Row<'a> {
    fn raw(&self, column: &str) -> &'a str {
        let record: &'a csv::StringRecord = self.record;
        self.columns
            .get(column)
            .and_then(|&i| record.get(i))
            .map(str::trim)
            .unwrap_or("")
    }

    fn text(&self, column: &str) -> Option<String> {
        let s = self.raw(column);
        (!s.is_empty()).then(|| s.to_string())
    }

    fn bad_cell(&mut self, column: &str, what: &str) {
        let value = self.raw(column).to_string();
        self.issues.push(
            "ingest",
            "unparseable_cell",
            format!("{}: row {}: {what} `{value}` in `{column}` treated as missing", self.path, self.line),
        );
    }

    fn f64(&mut self, column: &str) -> Option<f64> {
        let s = self.raw(column);
        if s.is_empty() {
            return None;
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.bad_cell(column, "non-numeric value");
                None
            }
        }
    }

    fn i64(&mut self, column: &str) -> Option<i64> {
        let s = self.raw(column);
        if s.is_empty() {
            return None;
        }
        match s.parse::<i64>() {
            Ok(v) => Some(v),
            // integer-valued floats such as "12.0" appear in some exports
            Err(_) => match s.parse::<f64>() {
                Ok(v) if v.fract() == 0.0 && v.is_finite() => Some(v as i64),
                _ => {
                    self.bad_cell(column, "non-integer value");
                    None
                }
            },
        }
    }

    fn required_i64(&mut self, column: &str) -> Result<i64> {
        match self.i64(column) {
            Some(v) => Ok(v),
            None => Err(Error::MalformedRow {
                path: self.path.to_string(),
                row: self.line,
                reason: format!("required identifier `{column}` is missing or invalid"),
            }),
        }
    }

    fn timestamp(&mut self, column: &str) -> Result<Option<Timestamp>> {
        let s = self.raw(column);
        if s.is_empty() {
            return Ok(None);
        }
        match parse_timestamp(s) {
            Some(ts) => Ok(Some(ts)),
            None if self.kind.is_root() => Err(Error::BadTimestamp {
                path: self.path.to_string(),
                row: self.line,
                column: column.to_string(),
                value: s.to_string(),
            }),
            None => {
                self.bad_cell(column, "bad timestamp");
                Ok(None)
            }
        }
    }

    fn temperature(&mut self, opts: &ParseOptions) -> Option<f64> {
        self.f64("temperature").map(|v| convert_temperature(v, opts.temperature_unit))
    }

    fn vitals(&mut self, opts: &ParseOptions) -> Vitals {
        Vitals {
            temperature: self.temperature(opts),
            heartrate: self.f64("heartrate"),
            resprate: self.f64("resprate"),
            o2sat: self.f64("o2sat"),
            sbp: self.f64("sbp"),
            dbp: self.f64("dbp"),
        }
    }

    fn pain(&mut self) -> Option<f64> {
        let s = self.raw("pain");
        if s.is_empty() {
            return None;
        }
        let parsed = parse_pain(s);
        if parsed.is_none() {
            self.bad_cell("pain", "unusable pain score");
        }
        parsed
    }

    fn skip(&mut self, reason: &str) {
        self.issues
            .push("ingest", "row_skipped", format!("{}: row {}: {reason}", self.path, self.line));
    }
}

/// A record type that maps one-to-one onto a row of a source table.
pub trait SourceRecord: Sized {
    const KIND: TableKind;

    /// Header written by [`write_table`]; a superset of the required columns.
    fn header() -> &'static [&'static str];

    /// `Ok(None)` drops the row (already logged).
    fn from_row(row: &mut Row<'_>, opts: &ParseOptions) -> Result<Option<Self>>;

    fn to_row(&self, unit: TemperatureUnit) -> Vec<String>;
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

fn opt_ts(v: &Option<Timestamp>) -> String {
    v.as_ref().map(format_timestamp).unwrap_or_default()
}

fn vitals_cells(v: &Vitals, unit: TemperatureUnit) -> [String; 6] {
    [
        opt_f64(v.temperature.map(|t| celsius_to(t, unit))),
        opt_f64(v.heartrate),
        opt_f64(v.resprate),
        opt_f64(v.o2sat),
        opt_f64(v.sbp),
        opt_f64(v.dbp),
    ]
}

impl SourceRecord for EdStayRecord {
    const KIND: TableKind = TableKind::EdStays;

    fn header() -> &'static [&'static str] {
        &["subject_id", "hadm_id", "stay_id", "intime", "outtime", "disposition"]
    }

    fn from_row(row: &mut Row<'_>, _opts: &ParseOptions) -> Result<Option<Self>> {
        let subject_id = row.required_i64("subject_id")?;
        let stay_id = row.required_i64("stay_id")?;
        let hadm_id = row.i64("hadm_id");
        let intime = row.timestamp("intime")?.ok_or_else(|| Error::BadTimestamp {
            path: row.path.to_string(),
            row: row.line,
            column: "intime".into(),
            value: String::new(),
        })?;
        let outtime = row.timestamp("outtime")?;
        if let Some(out) = outtime {
            if out < intime {
                let msg = format!("{}: row {}: stay {stay_id} has outtime before intime", row.path, row.line);
                row.issues.push("ingest", "outtime_before_intime", msg);
            }
        }
        Ok(Some(EdStayRecord {
            subject_id,
            stay_id,
            hadm_id,
            intime,
            outtime,
            disposition: row.text("disposition").unwrap_or_default(),
        }))
    }

    fn to_row(&self, _unit: TemperatureUnit) -> Vec<String> {
        vec![
            self.subject_id.to_string(),
            opt(&self.hadm_id),
            self.stay_id.to_string(),
            format_timestamp(&self.intime),
            opt_ts(&self.outtime),
            self.disposition.clone(),
        ]
    }
}

impl SourceRecord for TriageRecord {
    const KIND: TableKind = TableKind::Triage;

    fn header() -> &'static [&'static str] {
        &[
            "subject_id",
            "stay_id",
            "temperature",
            "heartrate",
            "resprate",
            "o2sat",
            "sbp",
            "dbp",
            "pain",
            "acuity",
            "chiefcomplaint",
        ]
    }

    fn from_row(row: &mut Row<'_>, opts: &ParseOptions) -> Result<Option<Self>> {
        let stay_id = row.required_i64("stay_id")?;
        let acuity = match row.i64("acuity") {
            Some(a @ 1..=5) => Some(a as u8),
            Some(_) => {
                row.bad_cell("acuity", "acuity outside 1..=5");
                None
            }
            None => None,
        };
        Ok(Some(TriageRecord {
            subject_id: row.i64("subject_id"),
            stay_id,
            vitals: row.vitals(opts),
            pain: row.pain(),
            acuity,
            chiefcomplaint: row.text("chiefcomplaint"),
        }))
    }

    fn to_row(&self, unit: TemperatureUnit) -> Vec<String> {
        let mut cells = vec![opt(&self.subject_id), self.stay_id.to_string()];
        cells.extend(vitals_cells(&self.vitals, unit));
        cells.push(opt_f64(self.pain));
        cells.push(opt(&self.acuity));
        cells.push(self.chiefcomplaint.clone().unwrap_or_default());
        cells
    }
}

impl SourceRecord for VitalSignRecord {
    const KIND: TableKind = TableKind::VitalSign;

    fn header() -> &'static [&'static str] {
        &[
            "subject_id",
            "stay_id",
            "charttime",
            "temperature",
            "heartrate",
            "resprate",
            "o2sat",
            "sbp",
            "dbp",
            "pain",
        ]
    }

    fn from_row(row: &mut Row<'_>, opts: &ParseOptions) -> Result<Option<Self>> {
        let stay_id = row.required_i64("stay_id")?;
        let Some(charttime) = row.timestamp("charttime")? else {
            row.skip("vital sign without charttime");
            return Ok(None);
        };
        Ok(Some(VitalSignRecord {
            subject_id: row.i64("subject_id"),
            stay_id,
            charttime,
            vitals: row.vitals(opts),
            pain: row.pain(),
        }))
    }

    fn to_row(&self, unit: TemperatureUnit) -> Vec<String> {
        let mut cells = vec![opt(&self.subject_id), self.stay_id.to_string(), format_timestamp(&self.charttime)];
        cells.extend(vitals_cells(&self.vitals, unit));
        cells.push(opt_f64(self.pain));
        cells
    }
}

impl SourceRecord for PatientRecord {
    const KIND: TableKind = TableKind::Patients;

    fn header() -> &'static [&'static str] {
        &["subject_id", "gender", "anchor_age", "anchor_year", "dod"]
    }

    fn from_row(row: &mut Row<'_>, _opts: &ParseOptions) -> Result<Option<Self>> {
        let subject_id = row.required_i64("subject_id")?;
        let Some(gender) = Gender::parse(row.raw("gender")) else {
            row.skip("unknown gender");
            return Ok(None);
        };
        let (Some(anchor_age), Some(anchor_year)) = (row.i64("anchor_age"), row.i64("anchor_year")) else {
            row.skip("missing anchor age or year");
            return Ok(None);
        };
        if anchor_age < 0 {
            row.skip("negative anchor_age");
            return Ok(None);
        }
        let dod_raw = row.raw("dod").to_string();
        let dod = if dod_raw.is_empty() {
            None
        } else {
            let parsed = parse_date(&dod_raw);
            if parsed.is_none() {
                row.bad_cell("dod", "bad date");
            }
            parsed
        };
        Ok(Some(PatientRecord {
            subject_id,
            gender,
            anchor_age: anchor_age as i32,
            anchor_year: anchor_year as i32,
            dod,
        }))
    }

    fn to_row(&self, _unit: TemperatureUnit) -> Vec<String> {
        vec![
            self.subject_id.to_string(),
            self.gender.as_str().to_string(),
            self.anchor_age.to_string(),
            self.anchor_year.to_string(),
            self.dod.map(|d| d.format(DATE_FORMAT).to_string()).unwrap_or_default(),
        ]
    }
}

impl SourceRecord for AdmissionRecord {
    const KIND: TableKind = TableKind::Admissions;

    fn header() -> &'static [&'static str] {
        &["subject_id", "hadm_id", "admittime", "dischtime", "deathtime"]
    }

    fn from_row(row: &mut Row<'_>, _opts: &ParseOptions) -> Result<Option<Self>> {
        let subject_id = row.required_i64("subject_id")?;
        let hadm_id = row.required_i64("hadm_id")?;
        let (Some(admittime), Some(dischtime)) = (row.timestamp("admittime")?, row.timestamp("dischtime")?) else {
            row.skip("admission without admit/discharge time");
            return Ok(None);
        };
        if dischtime < admittime {
            let msg = format!("{}: row {}: admission {hadm_id} discharged before admit", row.path, row.line);
            row.issues.push("ingest", "dischtime_before_admittime", msg);
        }
        Ok(Some(AdmissionRecord {
            subject_id,
            hadm_id,
            admittime,
            dischtime,
            deathtime: row.timestamp("deathtime")?,
        }))
    }

    fn to_row(&self, _unit: TemperatureUnit) -> Vec<String> {
        vec![
            self.subject_id.to_string(),
            self.hadm_id.to_string(),
            format_timestamp(&self.admittime),
            format_timestamp(&self.dischtime),
            opt_ts(&self.deathtime),
        ]
    }
}

impl SourceRecord for IcuStayRecord {
    const KIND: TableKind = TableKind::IcuStays;

    fn header() -> &'static [&'static str] {
        &["subject_id", "hadm_id", "stay_id", "intime", "outtime"]
    }

    fn from_row(row: &mut Row<'_>, _opts: &ParseOptions) -> Result<Option<Self>> {
        let subject_id = row.required_i64("subject_id")?;
        let hadm_id = row.required_i64("hadm_id")?;
        // MIMIC-IV names the ICU stay identifier `stay_id`.
        let icu_stay_id = row.required_i64("stay_id")?;
        let Some(intime) = row.timestamp("intime")? else {
            row.skip("ICU stay without intime");
            return Ok(None);
        };
        Ok(Some(IcuStayRecord {
            subject_id,
            hadm_id,
            icu_stay_id,
            intime,
            outtime: row.timestamp("outtime")?,
        }))
    }

    fn to_row(&self, _unit: TemperatureUnit) -> Vec<String> {
        vec![
            self.subject_id.to_string(),
            self.hadm_id.to_string(),
            self.icu_stay_id.to_string(),
            format_timestamp(&self.intime),
            opt_ts(&self.outtime),
        ]
    }
}

impl SourceRecord for DiagnosisRecord {
    const KIND: TableKind = TableKind::Diagnoses;

    fn header() -> &'static [&'static str] {
        &["subject_id", "hadm_id", "seq_num", "icd_code", "icd_version"]
    }

    fn from_row(row: &mut Row<'_>, _opts: &ParseOptions) -> Result<Option<Self>> {
        let subject_id = row.required_i64("subject_id")?;
        let hadm_id = row.required_i64("hadm_id")?;
        let Some(icd_code) = row.text("icd_code") else {
            row.skip("empty icd_code");
            return Ok(None);
        };
        let icd_version = match row.i64("icd_version") {
            Some(v @ (9 | 10)) => v as u8,
            _ => {
                row.skip("icd_version not 9 or 10");
                return Ok(None);
            }
        };
        Ok(Some(DiagnosisRecord {
            subject_id,
            hadm_id,
            seq_num: row.i64("seq_num").unwrap_or(0) as i32,
            icd_code,
            icd_version,
        }))
    }

    fn to_row(&self, _unit: TemperatureUnit) -> Vec<String> {
        vec![
            self.subject_id.to_string(),
            self.hadm_id.to_string(),
            self.seq_num.to_string(),
            self.icd_code.clone(),
            self.icd_version.to_string(),
        ]
    }
}

impl SourceRecord for MedreconRecord {
    const KIND: TableKind = TableKind::Medrecon;

    fn header() -> &'static [&'static str] {
        &["subject_id", "stay_id", "name"]
    }

    fn from_row(row: &mut Row<'_>, _opts: &ParseOptions) -> Result<Option<Self>> {
        Ok(Some(MedreconRecord {
            subject_id: row.i64("subject_id"),
            stay_id: row.required_i64("stay_id")?,
            name: row.text("name").unwrap_or_default(),
        }))
    }

    fn to_row(&self, _unit: TemperatureUnit) -> Vec<String> {
        vec![opt(&self.subject_id), self.stay_id.to_string(), self.name.clone()]
    }
}

impl SourceRecord for PyxisRecord {
    const KIND: TableKind = TableKind::Pyxis;

    fn header() -> &'static [&'static str] {
        &["subject_id", "stay_id", "charttime", "name"]
    }

    fn from_row(row: &mut Row<'_>, _opts: &ParseOptions) -> Result<Option<Self>> {
        Ok(Some(PyxisRecord {
            subject_id: row.i64("subject_id"),
            stay_id: row.required_i64("stay_id")?,
            charttime: row.timestamp("charttime")?,
            name: row.text("name").unwrap_or_default(),
        }))
    }

    fn to_row(&self, _unit: TemperatureUnit) -> Vec<String> {
        vec![opt(&self.subject_id), self.stay_id.to_string(), opt_ts(&self.charttime), self.name.clone()]
    }
}

/// Parse a table from any reader; `name` is used in messages only.
pub fn parse_reader<R: SourceRecord, In: Read>(
    input: In,
    name: &str,
    opts: &ParseOptions,
    issues: &mut IssueLog,
) -> Result<Vec<R>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|source| Error::Csv { path: name.to_string(), source })?
        .clone();
    let columns: HashMap<String, usize> =
        headers.iter().enumerate().map(|(i, h)| (h.trim().to_string(), i)).collect();
    for &required in R::KIND.required_columns() {
        if !columns.contains_key(required) {
            return Err(Error::MissingColumn { path: name.to_string(), column: required.to_string() });
        }
    }

    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(err) => {
                let row = err.position().map(|p| p.line()).unwrap_or(0);
                return Err(match err.kind() {
                    csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::MalformedRow {
                        path: name.to_string(),
                        row,
                        reason: format!("expected {expected_len} fields, found {len}"),
                    },
                    _ => Error::Csv { path: name.to_string(), source: err },
                });
            }
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let mut row = Row { record: &record, columns: &columns, path: name, line, kind: R::KIND, issues };
        if let Some(parsed) = R::from_row(&mut row, opts)? {
            out.push(parsed);
        }
    }
    Ok(out)
}

pub fn parse_table<R: SourceRecord>(path: &Path, opts: &ParseOptions, issues: &mut IssueLog) -> Result<Vec<R>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_reader(std::io::BufReader::new(file), &path.display().to_string(), opts, issues)
}

pub fn write_records<R: SourceRecord, W: Write>(out: W, records: &[R], unit: TemperatureUnit) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let to_err = |source| Error::Csv { path: R::KIND.file_name().to_string(), source };
    writer.write_record(R::header()).map_err(to_err)?;
    for r in records {
        writer.write_record(r.to_row(unit)).map_err(to_err)?;
    }
    writer.flush().map_err(|e| Error::io(R::KIND.file_name(), e))?;
    Ok(())
}

pub fn write_table<R: SourceRecord>(path: &Path, records: &[R], unit: TemperatureUnit) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(std::io::BufWriter::new(file), records, unit)
}

/// Parse all nine tables from `dir`. Files are read in parallel.
pub fn read_raw_tables(dir: &Path, opts: &ParseOptions) -> Result<(RawTables, IssueLog)> {
    for kind in TableKind::ALL {
        let path = dir.join(kind.file_name());
        if !path.is_file() {
            return Err(Error::Config(format!("input table {} not found", path.display())));
        }
    }

    fn load<R: SourceRecord + Send>(dir: &Path, opts: &ParseOptions) -> Result<(Vec<R>, IssueLog)> {
        let mut issues = IssueLog::new();
        let rows = parse_table(&dir.join(R::KIND.file_name()), opts, &mut issues)?;
        Ok((rows, issues))
    }

    let ((ed, tri), ((vs, pat), ((adm, icu), ((dx, mr), px)))) = rayon::join(
        || rayon::join(|| load::<EdStayRecord>(dir, opts), || load::<TriageRecord>(dir, opts)),
        || {
            rayon::join(
                || rayon::join(|| load::<VitalSignRecord>(dir, opts), || load::<PatientRecord>(dir, opts)),
                || {
                    rayon::join(
                        || rayon::join(|| load::<AdmissionRecord>(dir, opts), || load::<IcuStayRecord>(dir, opts)),
                        || {
                            rayon::join(
                                || rayon::join(|| load::<DiagnosisRecord>(dir, opts), || load::<MedreconRecord>(dir, opts)),
                                || load::<PyxisRecord>(dir, opts),
                            )
                        },
                    )
                },
            )
        },
    );

    // Issues are merged in table order so logs are identical across runs.
    let mut issues = IssueLog::new();
    fn take<T>(issues: &mut IssueLog, r: Result<(Vec<T>, IssueLog)>) -> Result<Vec<T>> {
        r.map(|(rows, log)| {
            issues.extend(log);
            rows
        })
    }
    let tables = RawTables {
        edstays: take(&mut issues, ed)?,
        triage: take(&mut issues, tri)?,
        vitalsign: take(&mut issues, vs)?,
        patients: take(&mut issues, pat)?,
        admissions: take(&mut issues, adm)?,
        icustays: take(&mut issues, icu)?,
        diagnoses: take(&mut issues, dx)?,
        medrecon: take(&mut issues, mr)?,
        pyxis: take(&mut issues, px)?,
    };
    Ok((tables, issues))
}

pub fn write_raw_tables(dir: &Path, tables: &RawTables, unit: TemperatureUnit) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_table(&dir.join(TableKind::EdStays.file_name()), &tables.edstays, unit)?;
    write_table(&dir.join(TableKind::Triage.file_name()), &tables.triage, unit)?;
    write_table(&dir.join(TableKind::VitalSign.file_name()), &tables.vitalsign, unit)?;
    write_table(&dir.join(TableKind::Patients.file_name()), &tables.patients, unit)?;
    write_table(&dir.join(TableKind::Admissions.file_name()), &tables.admissions, unit)?;
    write_table(&dir.join(TableKind::IcuStays.file_name()), &tables.icustays, unit)?;
    write_table(&dir.join(TableKind::Diagnoses.file_name()), &tables.diagnoses, unit)?;
    write_table(&dir.join(TableKind::Medrecon.file_name()), &tables.medrecon, unit)?;
    write_table(&dir.join(TableKind::Pyxis.file_name()), &tables.pyxis, unit)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse<R: SourceRecord>(text: &str) -> (Result<Vec<R>>, IssueLog) {
        let mut issues = IssueLog::new();
        let opts = ParseOptions::default();
        let r = parse_reader::<R, _>(text.as_bytes(), "fixture.csv", &opts, &mut issues);
        (r, issues)
    }

    #[test]
    fn temperature_conversion() {
        assert!((convert_temperature(98.6, TemperatureUnit::Fahrenheit) - 37.0).abs() < 1e-12);
        assert_eq!(convert_temperature(37.0, TemperatureUnit::Celsius), 37.0);
        assert_eq!(convert_temperature(212.0, TemperatureUnit::Fahrenheit), 100.0);
    }

    #[test]
    fn pain_rules() {
        assert_eq!(parse_pain("7"), Some(7.0));
        assert_eq!(parse_pain(" 0 "), Some(0.0));
        assert_eq!(parse_pain("UTA"), None);
        assert_eq!(parse_pain("11"), None);
        assert_eq!(parse_pain("3.5"), None);
        assert_eq!(parse_pain("-1"), None);
    }

    #[test]
    fn parses_three_edstays() {
        let text = "subject_id,hadm_id,stay_id,intime,outtime,gender,disposition\n\
            1,10,100,2150-01-01 10:00:00,2150-01-01 14:00:00,F,ADMITTED\n\
            1,,101,2150-02-01 10:00:00,2150-02-01 12:30:00,F,HOME\n\
            2,,102,2151-03-01 08:00:00,2151-03-01 09:00:00,M,HOME\n";
        let (rows, issues) = parse::<EdStayRecord>(text);
        let rows = rows.unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].hadm_id, Some(10));
        assert_eq!(rows[1].hadm_id, None);
        assert_eq!(rows[2].disposition, "HOME");
        assert!(issues.is_empty());
    }

    #[test]
    fn triage_uta_pain_is_missing() {
        let text = "subject_id,stay_id,temperature,heartrate,resprate,o2sat,sbp,dbp,pain,acuity,chiefcomplaint\n\
            1,100,98.6,80,16,99,120,80,UTA,2,Chest pain\n";
        let (rows, issues) = parse::<TriageRecord>(text);
        let row = &rows.unwrap()[0];
        assert_eq!(row.pain, None);
        assert_eq!(row.acuity, Some(2));
        assert!((row.vitals.temperature.unwrap() - 37.0).abs() < 1e-9);
        assert_eq!(issues.count("unparseable_cell"), 1);
    }

    #[test]
    fn inverted_times_are_kept_and_logged() {
        let text = "subject_id,hadm_id,stay_id,intime,outtime,disposition\n\
            1,,100,2150-01-01 10:00:00,2150-01-01 09:00:00,HOME\n";
        let (rows, issues) = parse::<EdStayRecord>(text);
        assert_eq!(rows.unwrap().len(), 1);
        assert_eq!(issues.count("outtime_before_intime"), 1);
    }

    #[test]
    fn missing_column_is_an_error() {
        let text = "subject_id,stay_id,intime,outtime,disposition\n1,100,2150-01-01 10:00:00,,HOME\n";
        let (rows, _) = parse::<EdStayRecord>(text);
        assert!(matches!(rows, Err(Error::MissingColumn { column, .. }) if column == "hadm_id"));
    }

    #[test]
    fn wrong_field_count_aborts() {
        let text = "subject_id,hadm_id,stay_id,intime,outtime,disposition\n1,,100,2150-01-01 10:00:00\n";
        let (rows, _) = parse::<EdStayRecord>(text);
        assert!(matches!(rows, Err(Error::MalformedRow { row: 2, .. })));
    }

    #[test]
    fn bad_root_timestamp_aborts_but_child_timestamp_is_missing() {
        let root = "subject_id,hadm_id,stay_id,intime,outtime,disposition\n1,,100,yesterday,,HOME\n";
        assert!(matches!(parse::<EdStayRecord>(root).0, Err(Error::BadTimestamp { .. })));

        let child = "subject_id,stay_id,charttime,name\n1,100,not a time,aspirin\n";
        let (rows, issues) = parse::<PyxisRecord>(child);
        assert_eq!(rows.unwrap()[0].charttime, None);
        assert_eq!(issues.count("unparseable_cell"), 1);
    }

    #[test]
    fn unparseable_numeric_becomes_missing() {
        let text = "stay_id,charttime,temperature,heartrate,resprate,o2sat,sbp,dbp\n\
            100,2150-01-01 10:00:00,,eighty,16,99,120,80\n";
        let (rows, issues) = parse::<VitalSignRecord>(text);
        assert_eq!(rows.unwrap()[0].vitals.heartrate, None);
        assert_eq!(issues.count("unparseable_cell"), 1);
    }

    #[test]
    fn patient_dod_accepts_date_or_timestamp() {
        let text = "subject_id,gender,anchor_age,anchor_year,dod\n1,F,50,2150,2155-03-01\n2,M,40,2150,2156-04-02 00:00:00\n";
        let rows = parse::<PatientRecord>(text).0.unwrap();
        assert_eq!(rows[0].dod, NaiveDate::from_ymd_opt(2155, 3, 1));
        assert_eq!(rows[1].dod, NaiveDate::from_ymd_opt(2156, 4, 2));
    }
}
