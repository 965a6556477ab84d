use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

pub type Timestamp = NaiveDateTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    F,
    M,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::F => "F",
            Gender::M => "M",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "F" | "f" => Some(Gender::F),
            "M" | "m" => Some(Gender::M),
            _ => None,
        }
    }
}

/// The six vital signs shared by triage and in-ED measurements.
/// Temperature is always Celsius once ingested.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Vitals {
    pub temperature: Option<f64>,
    pub heartrate: Option<f64>,
    pub resprate: Option<f64>,
    pub o2sat: Option<f64>,
    pub sbp: Option<f64>,
    pub dbp: Option<f64>,
}

impl Vitals {
    pub const NAMES: [&'static str; 6] = ["temperature", "heartrate", "resprate", "o2sat", "sbp", "dbp"];

    pub fn as_array(&self) -> [Option<f64>; 6] {
        [self.temperature, self.heartrate, self.resprate, self.o2sat, self.sbp, self.dbp]
    }

    pub fn from_array(v: [Option<f64>; 6]) -> Self {
        Vitals {
            temperature: v[0],
            heartrate: v[1],
            resprate: v[2],
            o2sat: v[3],
            sbp: v[4],
            dbp: v[5],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdStayRecord {
    pub subject_id: i64,
    pub stay_id: i64,
    pub hadm_id: Option<i64>,
    pub intime: Timestamp,
    /// Missing outtime makes the stay unlabelable; linkage drops it.
    pub outtime: Option<Timestamp>,
    pub disposition: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriageRecord {
    pub subject_id: Option<i64>,
    pub stay_id: i64,
    pub vitals: Vitals,
    pub pain: Option<f64>,
    pub acuity: Option<u8>,
    pub chiefcomplaint: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VitalSignRecord {
    pub subject_id: Option<i64>,
    pub stay_id: i64,
    pub charttime: Timestamp,
    pub vitals: Vitals,
    pub pain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub subject_id: i64,
    pub gender: Gender,
    pub anchor_age: i32,
    pub anchor_year: i32,
    pub dod: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionRecord {
    pub subject_id: i64,
    pub hadm_id: i64,
    pub admittime: Timestamp,
    pub dischtime: Timestamp,
    pub deathtime: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcuStayRecord {
    pub subject_id: i64,
    pub hadm_id: i64,
    pub icu_stay_id: i64,
    pub intime: Timestamp,
    pub outtime: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DiagnosisRecord {
    pub subject_id: i64,
    pub hadm_id: i64,
    pub seq_num: i32,
    pub icd_code: String,
    pub icd_version: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedreconRecord {
    pub subject_id: Option<i64>,
    pub stay_id: i64,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PyxisRecord {
    pub subject_id: Option<i64>,
    pub stay_id: i64,
    pub charttime: Option<Timestamp>,
    pub name: String,
}

/// In-memory images of the nine source tables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawTables {
    pub edstays: Vec<EdStayRecord>,
    pub triage: Vec<TriageRecord>,
    pub vitalsign: Vec<VitalSignRecord>,
    pub patients: Vec<PatientRecord>,
    pub admissions: Vec<AdmissionRecord>,
    pub icustays: Vec<IcuStayRecord>,
    pub diagnoses: Vec<DiagnosisRecord>,
    pub medrecon: Vec<MedreconRecord>,
    pub pyxis: Vec<PyxisRecord>,
}
