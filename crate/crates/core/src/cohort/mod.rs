//! Master dataset: one labeled row per ED visit.

mod complaints;
mod labels;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

pub use complaints::{ComplaintMatcher, DEFAULT_COMPLAINTS};
pub use labels::*;

use crate::comorbidity::{collect_codes_in_lookback, map_to_cci, map_to_eci, ComorbidityTables, LookbackOptions};
use crate::dataset::{format_cell, Frame};
use crate::error::{Error, Result};
use crate::ingest::{format_timestamp, Gender, LinkedCohort, Timestamp, Vitals};
use crate::issues::IssueLog;

pub const OUTCOMES: [&str; 5] = [
    "outcome_hospitalization",
    "outcome_inhospital_mortality",
    "outcome_icu_transfer_12h",
    "outcome_critical",
    "outcome_ed_revisit_3d",
];

const ID_COLUMNS: [&str; 5] = ["subject_id", "stay_id", "hadm_id", "intime", "outtime"];

#[derive(Debug, Clone, PartialEq)]
pub struct MasterRecord {
    pub subject_id: i64,
    pub stay_id: i64,
    pub hadm_id: Option<i64>,
    pub intime: Timestamp,
    pub outtime: Option<Timestamp>,
    pub age: i32,
    pub gender: Gender,
    /// Prior ED visits, hospitalizations and ICU stays over 30/90/365 days.
    pub n_ed: [u32; 3],
    pub n_hosp: [u32; 3],
    pub n_icu: [u32; 3],
    pub cci: Vec<u8>,
    pub eci: Vec<u8>,
    pub triage_acuity: Option<u8>,
    pub triage: Vitals,
    pub triage_pain: Option<f64>,
    pub chiefcom: Vec<bool>,
    pub ed: Vitals,
    pub ed_los: f64,
    pub n_med: u32,
    pub n_medrecon: u32,
    pub outcome_hospitalization: bool,
    pub outcome_inhospital_mortality: bool,
    pub outcome_icu_transfer_12h: bool,
    pub outcome_critical: bool,
    pub outcome_ed_revisit_3d: bool,
}

/// Names of the variable-width column groups.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterSchema {
    pub cci: Vec<String>,
    pub eci: Vec<String>,
    pub chiefcom: Vec<String>,
}

impl MasterSchema {
    pub fn new(tables: &ComorbidityTables, complaints: &ComplaintMatcher) -> Self {
        MasterSchema {
            cci: tables.charlson.fields.clone(),
            eci: tables.elixhauser.fields.clone(),
            chiefcom: complaints.names().map(|n| format!("chiefcom_{n}")).collect(),
        }
    }

    /// Value columns, in file order (identifiers excluded).
    pub fn value_columns(&self) -> Vec<String> {
        let mut out: Vec<String> = vec!["age".into(), "gender".into()];
        for kind in ["ed", "hosp", "icu"] {
            for w in HISTORY_WINDOWS_DAYS {
                out.push(format!("n_{kind}_{w}d"));
            }
        }
        out.extend(self.cci.iter().cloned());
        out.extend(self.eci.iter().cloned());
        out.push("triage_acuity".into());
        out.extend(Vitals::NAMES.iter().map(|v| format!("triage_{v}")));
        out.push("triage_pain".into());
        out.extend(self.chiefcom.iter().cloned());
        out.extend(Vitals::NAMES.iter().map(|v| format!("ed_{v}")));
        out.extend(["ed_los", "n_med", "n_medrecon"].map(String::from));
        out.extend(OUTCOMES.map(String::from));
        out
    }

    pub fn header(&self) -> Vec<String> {
        let mut out: Vec<String> = ID_COLUMNS.map(String::from).to_vec();
        out.extend(self.value_columns());
        out
    }
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl MasterRecord {
    /// Values in [`MasterSchema::value_columns`] order; NaN is missing and
    /// gender is M=1.
    pub fn values(&self) -> Vec<f64> {
        let mut out = vec![self.age as f64, flag(self.gender == Gender::M)];
        for counts in [self.n_ed, self.n_hosp, self.n_icu] {
            out.extend(counts.map(f64::from));
        }
        out.extend(self.cci.iter().map(|&v| f64::from(v)));
        out.extend(self.eci.iter().map(|&v| f64::from(v)));
        out.push(self.triage_acuity.map_or(f64::NAN, f64::from));
        out.extend(self.triage.as_array().map(opt));
        out.push(opt(self.triage_pain));
        out.extend(self.chiefcom.iter().map(|&b| flag(b)));
        out.extend(self.ed.as_array().map(opt));
        out.extend([self.ed_los, f64::from(self.n_med), f64::from(self.n_medrecon)]);
        out.extend(
            [
                self.outcome_hospitalization,
                self.outcome_inhospital_mortality,
                self.outcome_icu_transfer_12h,
                self.outcome_critical,
                self.outcome_ed_revisit_3d,
            ]
            .map(flag),
        );
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct CohortOptions {
    pub lookback: LookbackOptions,
    pub comorbidity: ComorbidityTables,
    pub complaints: ComplaintMatcher,
}

impl CohortOptions {
    pub fn schema(&self) -> MasterSchema {
        MasterSchema::new(&self.comorbidity, &self.complaints)
    }
}

struct SubjectTimes {
    ed: Vec<Timestamp>,
    hosp: Vec<Timestamp>,
    icu: Vec<Timestamp>,
}

/// One record per linked ED stay, in stay_id order.
pub fn build_master(cohort: &LinkedCohort, opts: &CohortOptions, issues: &mut IssueLog) -> Result<Vec<MasterRecord>> {
    let times: BTreeMap<i64, SubjectTimes> = cohort
        .subjects
        .iter()
        .map(|(&id, s)| {
            let t = SubjectTimes {
                ed: s.ed_stays.iter().map(|&i| cohort.stays[i].intime).collect(),
                hosp: s.admissions.iter().map(|a| a.admittime).collect(),
                icu: s.icu_stays.iter().map(|u| u.intime).collect(),
            };
            (id, t)
        })
        .collect();

    let results: Vec<(Result<MasterRecord>, IssueLog)> = (0..cohort.len())
        .into_par_iter()
        .map(|i| {
            let mut log = IssueLog::new();
            let rec = build_one(cohort, &times, i, opts, &mut log);
            (rec, log)
        })
        .collect();

    let mut out = Vec::with_capacity(results.len());
    for (rec, log) in results {
        issues.extend(log);
        out.push(rec?);
    }
    Ok(out)
}

fn build_one(
    cohort: &LinkedCohort,
    times: &BTreeMap<i64, SubjectTimes>,
    i: usize,
    opts: &CohortOptions,
    issues: &mut IssueLog,
) -> Result<MasterRecord> {
    let stay = &cohort.stays[i];
    let att = &cohort.attachments[i];
    let subject = cohort.subject(stay.subject_id);
    let t = &times[&stay.subject_id];

    let admission = stay.hadm_id.and_then(|h| subject.admission(h));
    if let (Some(h), None) = (stay.hadm_id, admission) {
        issues.push("cohort", "unresolved_hadm", format!("stay {}: hadm_id {h} not in admissions", stay.stay_id));
    }
    if matches!(stay.outtime, Some(out) if out < stay.intime) {
        issues.push("cohort", "negative_los", format!("stay {}: outtime before intime; ed_los set to 0", stay.stay_id));
    }

    let codes = collect_codes_in_lookback(subject, stay, opts.lookback);
    if codes.unresolved > 0 {
        issues.push(
            "cohort",
            "unresolved_diagnosis_hadm",
            format!("stay {}: {} diagnoses without a matching admission skipped", stay.stay_id, codes.unresolved),
        );
    }
    let cci = map_to_cci(&opts.comorbidity, &codes.codes)?;
    let eci = map_to_eci(&opts.comorbidity, &codes.codes)?;

    let pos = subject.ed_stays.iter().position(|&j| j == i).expect("stay indexed under its subject");
    let next = subject.ed_stays.get(pos + 1).map(|&j| &cohort.stays[j]);

    let mortality = label_inpatient_mortality(admission, &subject.patient);
    let icu12 = label_icu_transfer_12h(stay, &subject.icu_stays);
    let triage = att.triage.as_ref();

    Ok(MasterRecord {
        subject_id: stay.subject_id,
        stay_id: stay.stay_id,
        hadm_id: stay.hadm_id,
        intime: stay.intime,
        outtime: stay.outtime,
        age: compute_age(&subject.patient, stay.intime),
        gender: subject.patient.gender,
        n_ed: history_counts(&t.ed, stay.intime),
        n_hosp: history_counts(&t.hosp, stay.intime),
        n_icu: history_counts(&t.icu, stay.intime),
        cci,
        eci,
        triage_acuity: triage.and_then(|t| t.acuity),
        triage: triage.map(|t| t.vitals).unwrap_or_default(),
        triage_pain: triage.and_then(|t| t.pain),
        chiefcom: opts.complaints.match_text(triage.and_then(|t| t.chiefcomplaint.as_deref())),
        ed: extract_ed_vitals(&att.vitals),
        ed_los: ed_los_hours(stay),
        n_med: att.pyxis.len() as u32,
        n_medrecon: att.medrecon.len() as u32,
        outcome_hospitalization: label_hospitalization(admission),
        outcome_inhospital_mortality: mortality,
        outcome_icu_transfer_12h: icu12,
        outcome_critical: label_critical(mortality, icu12),
        outcome_ed_revisit_3d: label_ed_reattendance_72h(stay, next),
    })
}

/// Write `master_dataset.csv`: identifiers, demographics, history,
/// comorbidity, triage, ED, outcomes. Booleans are 0/1, missing is empty.
pub fn write_master<W: Write>(out: W, records: &[MasterRecord], schema: &MasterSchema) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |source| Error::Csv { path: "master_dataset.csv".into(), source };
    w.write_record(schema.header()).map_err(err)?;
    let gender_col = 1;
    for r in records {
        let mut row = vec![
            r.subject_id.to_string(),
            r.stay_id.to_string(),
            r.hadm_id.map(|h| h.to_string()).unwrap_or_default(),
            format_timestamp(&r.intime),
            r.outtime.as_ref().map(format_timestamp).unwrap_or_default(),
        ];
        for (k, v) in r.values().into_iter().enumerate() {
            row.push(if k == gender_col { r.gender.as_str().to_string() } else { format_cell(v) });
        }
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("master_dataset.csv", e))?;
    Ok(())
}

pub fn write_master_path(path: &Path, records: &[MasterRecord], schema: &MasterSchema) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_master(std::io::BufWriter::new(file), records, schema)
}

/// The master records as a frame, same columns as the CSV minus the
/// non-numeric identifiers.
pub fn master_frame(records: &[MasterRecord], schema: &MasterSchema) -> Result<Frame> {
    let names = schema.value_columns();
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(records.len()); names.len()];
    for r in records {
        for (c, v) in cols.iter_mut().zip(r.values()) {
            c.push(v);
        }
    }
    let mut frame = Frame::new(records.iter().map(|r| r.subject_id).collect(), records.iter().map(|r| r.stay_id).collect());
    for (name, col) in names.into_iter().zip(cols) {
        frame.push_column(name, col)?;
    }
    Ok(frame)
}
