//! ICD-9/ICD-10 diagnosis codes to Charlson and Elixhauser indicators.
//!
//! The crosswalks are data files (`data/charlson.toml`,
//! `data/elixhauser.toml`) of code prefixes per category; see the header
//! of either file for the format.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::Months;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ingest::{EdStayRecord, SubjectHistory};

pub const DEFAULT_CHARLSON: &str = include_str!("../data/charlson.toml");
pub const DEFAULT_ELIXHAUSER: &str = include_str!("../data/elixhauser.toml");

/// A diagnosis code with punctuation removed, tagged with its ICD version.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IcdCode {
    pub code: String,
    pub version: u8,
}

impl IcdCode {
    pub fn new(code: &str, version: u8) -> Self {
        IcdCode { code: normalize_code(code), version }
    }
}

/// Uppercase and strip everything that is not a letter or digit
/// ("I21.4" -> "I214").
pub fn normalize_code(code: &str) -> String {
    code.chars().filter(char::is_ascii_alphanumeric).map(|c| c.to_ascii_uppercase()).collect()
}

#[derive(Debug, Deserialize)]
struct TableFile {
    index: String,
    category: Vec<CategoryFile>,
}

#[derive(Debug, Deserialize)]
struct CategoryFile {
    field: String,
    #[serde(default = "one")]
    level: u8,
    label: String,
    icd9: Vec<String>,
    icd10: Vec<String>,
}

fn one() -> u8 {
    1
}

#[derive(Debug, Clone, PartialEq)]
pub struct Category {
    pub field: usize,
    pub level: u8,
    pub label: String,
    pub icd9: Vec<String>,
    pub icd10: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcdMappingTable {
    pub index: String,
    /// Output column names, in file order of first appearance.
    pub fields: Vec<String>,
    /// Highest level per field; 1 for binary fields.
    pub max_level: Vec<u8>,
    pub categories: Vec<Category>,
}

/// Expand `A-B` into all same-length codes between the endpoints; other
/// entries are returned as-is.
fn expand_prefix(entry: &str) -> Result<Vec<String>> {
    let Some((lo, hi)) = entry.split_once('-') else {
        return Ok(vec![normalize_code(entry)]);
    };
    let (lo, hi) = (normalize_code(lo), normalize_code(hi));
    let bad = || Error::Config(format!("bad code range `{entry}`"));
    if lo.len() != hi.len() || lo.is_empty() {
        return Err(bad());
    }
    let common = lo.bytes().zip(hi.bytes()).take_while(|(a, b)| a == b).count();
    let head = &lo[..common];
    let (lo_tail, hi_tail) = (&lo[common..], &hi[common..]);
    if lo_tail.is_empty() {
        return Ok(vec![lo]);
    }
    let width = lo_tail.len();
    let start: u32 = lo_tail.parse().map_err(|_| bad())?;
    let end: u32 = hi_tail.parse().map_err(|_| bad())?;
    if end < start {
        return Err(bad());
    }
    Ok((start..=end).map(|n| format!("{head}{n:0width$}")).collect())
}

impl IcdMappingTable {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: TableFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("comorbidity table: {e}")))?;
        let mut fields: Vec<String> = Vec::new();
        let mut levels_seen: Vec<BTreeSet<u8>> = Vec::new();
        let mut categories = Vec::with_capacity(file.category.len());
        for c in file.category {
            let field = match fields.iter().position(|f| *f == c.field) {
                Some(i) => i,
                None => {
                    fields.push(c.field.clone());
                    levels_seen.push(BTreeSet::new());
                    fields.len() - 1
                }
            };
            if c.level == 0 || !levels_seen[field].insert(c.level) {
                return Err(Error::Config(format!("{}: level {} is zero or repeated", c.field, c.level)));
            }
            let expand = |list: &[String]| -> Result<Vec<String>> {
                let mut out = Vec::new();
                for entry in list {
                    out.extend(expand_prefix(entry)?);
                }
                out.sort();
                out.dedup();
                Ok(out)
            };
            let icd9 = expand(&c.icd9)?;
            let icd10 = expand(&c.icd10)?;
            if icd9.is_empty() && icd10.is_empty() {
                return Err(Error::Config(format!("category `{}` maps to no codes", c.label)));
            }
            if icd9.iter().chain(&icd10).any(String::is_empty) {
                return Err(Error::Config(format!("category `{}` has an empty prefix", c.label)));
            }
            categories.push(Category { field, level: c.level, label: c.label, icd9, icd10 });
        }
        let max_level = levels_seen.iter().map(|s| s.iter().copied().max().unwrap_or(1)).collect();
        Ok(IcdMappingTable { index: file.index, fields, max_level, categories })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn charlson() -> Self {
        Self::from_toml(DEFAULT_CHARLSON).expect("bundled Charlson table is valid")
    }

    pub fn elixhauser() -> Self {
        Self::from_toml(DEFAULT_ELIXHAUSER).expect("bundled Elixhauser table is valid")
    }

    pub fn is_ordinal(&self, field: usize) -> bool {
        self.max_level[field] > 1
    }

    /// Categories a single code falls into.
    pub fn categories_of<'a>(&'a self, code: &'a IcdCode) -> impl Iterator<Item = &'a Category> + 'a {
        self.categories.iter().filter(move |c| {
            let prefixes = if code.version == 9 { &c.icd9 } else { &c.icd10 };
            prefixes.iter().any(|p| code.code.starts_with(p.as_str()))
        })
    }

    /// One value per field: 0/1 for binary fields, the highest matched level
    /// for ordinal ones.
    pub fn map_codes<'a>(&self, codes: impl IntoIterator<Item = &'a IcdCode>) -> Result<Vec<u8>> {
        let mut out = vec![0u8; self.fields.len()];
        for code in codes {
            if code.version != 9 && code.version != 10 {
                return Err(Error::UnknownVersion(code.version));
            }
            for c in self.categories_of(code) {
                out[c.field] = out[c.field].max(c.level);
            }
        }
        Ok(out)
    }
}

/// Both indices, loaded once and shared.
#[derive(Debug, Clone, PartialEq)]
pub struct ComorbidityTables {
    pub charlson: IcdMappingTable,
    pub elixhauser: IcdMappingTable,
}

impl Default for ComorbidityTables {
    fn default() -> Self {
        ComorbidityTables { charlson: IcdMappingTable::charlson(), elixhauser: IcdMappingTable::elixhauser() }
    }
}

pub fn map_to_cci<'a>(tables: &ComorbidityTables, codes: impl IntoIterator<Item = &'a IcdCode>) -> Result<Vec<u8>> {
    tables.charlson.map_codes(codes)
}

pub fn map_to_eci<'a>(tables: &ComorbidityTables, codes: impl IntoIterator<Item = &'a IcdCode>) -> Result<Vec<u8>> {
    tables.elixhauser.map_codes(codes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LookbackOptions {
    pub years: u32,
    /// Also take codes from the admission that follows the index visit.
    /// Off by default: those codes are recorded after triage.
    pub include_index_admission: bool,
}

impl Default for LookbackOptions {
    fn default() -> Self {
        LookbackOptions { years: 5, include_index_admission: false }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollectedCodes {
    pub codes: BTreeSet<IcdCode>,
    /// Diagnoses whose hadm_id did not resolve to an admission.
    pub unresolved: usize,
}

/// Codes from admissions that began in `[intime - lookback, intime)`.
pub fn collect_codes_in_lookback(
    subject: &SubjectHistory,
    stay: &EdStayRecord,
    opts: LookbackOptions,
) -> CollectedCodes {
    let start = stay
        .intime
        .checked_sub_months(Months::new(opts.years.saturating_mul(12)))
        .unwrap_or(chrono::NaiveDateTime::MIN);
    let admit: BTreeMap<i64, _> = subject.admissions.iter().map(|a| (a.hadm_id, a.admittime)).collect();
    let mut out = CollectedCodes::default();
    for d in &subject.diagnoses {
        let Some(&admittime) = admit.get(&d.hadm_id) else {
            out.unresolved += 1;
            continue;
        };
        let is_index = stay.hadm_id == Some(d.hadm_id);
        let keep = if is_index {
            opts.include_index_admission
        } else {
            admittime >= start && admittime < stay.intime
        };
        if keep {
            out.codes.insert(IcdCode::new(&d.icd_code, d.icd_version));
        }
    }
    out
}
