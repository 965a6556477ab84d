use std::collections::{BTreeMap, BTreeSet};

use chrono::Duration;

use super::records::*;
use crate::error::{Error, Result};
use crate::issues::IssueLog;

/// Rows attached to one root ED stay.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StayAttachments {
    pub triage: Option<TriageRecord>,
    /// Sorted by charttime.
    pub vitals: Vec<VitalSignRecord>,
    pub medrecon: Vec<MedreconRecord>,
    pub pyxis: Vec<PyxisRecord>,
}

/// Everything known about one patient, each list sorted by event time.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectHistory {
    pub patient: PatientRecord,
    /// Indices into [`LinkedCohort::stays`], sorted by intime.
    pub ed_stays: Vec<usize>,
    pub admissions: Vec<AdmissionRecord>,
    pub icu_stays: Vec<IcuStayRecord>,
    pub diagnoses: Vec<DiagnosisRecord>,
}

impl SubjectHistory {
    pub fn admission(&self, hadm_id: i64) -> Option<&AdmissionRecord> {
        self.admissions.iter().find(|a| a.hadm_id == hadm_id)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct LinkReport {
    pub input_stays: usize,
    pub dropped_missing_patient: usize,
    pub dropped_missing_outtime: usize,
    /// Child rows whose key did not resolve, per table file name.
    pub orphans: BTreeMap<&'static str, usize>,
    pub duplicates: BTreeMap<&'static str, usize>,
}

impl LinkReport {
    pub fn dropped_stays(&self) -> usize {
        self.dropped_missing_patient + self.dropped_missing_outtime
    }

    pub fn orphan_count(&self) -> usize {
        self.orphans.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkedCohort {
    /// Root ED stays, sorted by stay_id.
    pub stays: Vec<EdStayRecord>,
    /// Parallel to `stays`.
    pub attachments: Vec<StayAttachments>,
    pub subjects: BTreeMap<i64, SubjectHistory>,
    pub report: LinkReport,
}

impl LinkedCohort {
    pub fn subject(&self, subject_id: i64) -> &SubjectHistory {
        &self.subjects[&subject_id]
    }

    pub fn len(&self) -> usize {
        self.stays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stays.is_empty()
    }
}

const VITALS_SLACK_HOURS: i64 = 1;

/// Total order on vitals so ties on charttime sort deterministically.
fn vitals_key(v: &Vitals) -> [Option<u64>; 6] {
    v.as_array().map(|x| x.map(f64::to_bits))
}

/// Join the nine tables into a per-visit view rooted at the ED stays.
///
/// Pure: the result depends only on the multiset of input rows, not on
/// their order.
pub fn link_tables(tables: &RawTables, issues: &mut IssueLog) -> Result<LinkedCohort> {
    let mut report = LinkReport { input_stays: tables.edstays.len(), ..Default::default() };

    let mut patients: BTreeMap<i64, PatientRecord> = BTreeMap::new();
    let mut sorted_patients: Vec<&PatientRecord> = tables.patients.iter().collect();
    sorted_patients.sort_by(|a, b| {
        (a.subject_id, a.anchor_year, a.anchor_age).cmp(&(b.subject_id, b.anchor_year, b.anchor_age))
    });
    for p in sorted_patients {
        if patients.contains_key(&p.subject_id) {
            *report.duplicates.entry("patients.csv").or_default() += 1;
            issues.push("link", "duplicate_patient", format!("subject {} listed twice; first kept", p.subject_id));
            continue;
        }
        patients.insert(p.subject_id, p.clone());
    }

    let mut roots: Vec<&EdStayRecord> = tables.edstays.iter().collect();
    roots.sort_by_key(|s| s.stay_id);
    for pair in roots.windows(2) {
        if pair[0].stay_id == pair[1].stay_id {
            return Err(Error::DuplicateKey { key_name: "stay_id", key: pair[0].stay_id });
        }
    }

    let mut stays = Vec::with_capacity(roots.len());
    for stay in roots {
        if !patients.contains_key(&stay.subject_id) {
            report.dropped_missing_patient += 1;
            issues.push(
                "link",
                "missing_patient",
                format!("stay {} references subject {} with no patient row; dropped", stay.stay_id, stay.subject_id),
            );
            continue;
        }
        if stay.outtime.is_none() {
            report.dropped_missing_outtime += 1;
            issues.push("link", "missing_outtime", format!("stay {} has no outtime; dropped", stay.stay_id));
            continue;
        }
        stays.push(stay.clone());
    }

    let position: BTreeMap<i64, usize> = stays.iter().enumerate().map(|(i, s)| (s.stay_id, i)).collect();
    let mut attachments = vec![StayAttachments::default(); stays.len()];

    let mut orphan = |report: &mut LinkReport, table: &'static str, stay_id: i64| {
        *report.orphans.entry(table).or_default() += 1;
        issues.push("link", "orphan_row", format!("{table}: stay {stay_id} has no root ED stay; row dropped"));
    };

    // Triage: at most one per stay. Canonical order so "first kept" is stable.
    let mut triage: Vec<&TriageRecord> = tables.triage.iter().collect();
    triage.sort_by(|a, b| {
        a.stay_id
            .cmp(&b.stay_id)
            .then_with(|| a.acuity.cmp(&b.acuity))
            .then_with(|| a.chiefcomplaint.cmp(&b.chiefcomplaint))
            .then_with(|| vitals_key(&a.vitals).cmp(&vitals_key(&b.vitals)))
            .then_with(|| a.pain.map(f64::to_bits).cmp(&b.pain.map(f64::to_bits)))
    });
    for t in triage {
        match position.get(&t.stay_id) {
            None => orphan(&mut report, "triage.csv", t.stay_id),
            Some(&i) if attachments[i].triage.is_some() => {
                *report.duplicates.entry("triage.csv").or_default() += 1;
            }
            Some(&i) => attachments[i].triage = Some(t.clone()),
        }
    }
    for v in &tables.vitalsign {
        match position.get(&v.stay_id) {
            None => orphan(&mut report, "vitalsign.csv", v.stay_id),
            Some(&i) => attachments[i].vitals.push(v.clone()),
        }
    }
    for m in &tables.medrecon {
        match position.get(&m.stay_id) {
            None => orphan(&mut report, "medrecon.csv", m.stay_id),
            Some(&i) => attachments[i].medrecon.push(m.clone()),
        }
    }
    for p in &tables.pyxis {
        match position.get(&p.stay_id) {
            None => orphan(&mut report, "pyxis.csv", p.stay_id),
            Some(&i) => attachments[i].pyxis.push(p.clone()),
        }
    }

    for (stay, att) in stays.iter().zip(attachments.iter_mut()) {
        att.vitals.sort_by_key(|v| (v.charttime, vitals_key(&v.vitals), v.pain.map(f64::to_bits)));
        att.medrecon.sort_by(|a, b| a.name.cmp(&b.name));
        att.pyxis.sort_by(|a, b| a.charttime.cmp(&b.charttime).then_with(|| a.name.cmp(&b.name)));

        let lo = stay.intime - Duration::hours(VITALS_SLACK_HOURS);
        let hi = stay.outtime.unwrap_or(stay.intime) + Duration::hours(VITALS_SLACK_HOURS);
        let outside = att.vitals.iter().filter(|v| v.charttime < lo || v.charttime > hi).count();
        if outside > 0 {
            issues.push(
                "link",
                "vitals_outside_stay",
                format!("stay {}: {outside} vital-sign rows outside the stay window (kept)", stay.stay_id),
            );
        }
    }

    let mut subjects: BTreeMap<i64, SubjectHistory> = BTreeMap::new();
    for (i, stay) in stays.iter().enumerate() {
        subjects
            .entry(stay.subject_id)
            .or_insert_with(|| SubjectHistory {
                patient: patients[&stay.subject_id].clone(),
                ed_stays: Vec::new(),
                admissions: Vec::new(),
                icu_stays: Vec::new(),
                diagnoses: Vec::new(),
            })
            .ed_stays
            .push(i);
    }

    let mut seen_hadm = BTreeSet::new();
    let mut admissions: Vec<&AdmissionRecord> = tables.admissions.iter().collect();
    admissions.sort_by_key(|a| (a.hadm_id, a.admittime));
    for a in admissions {
        if !seen_hadm.insert(a.hadm_id) {
            *report.duplicates.entry("admissions.csv").or_default() += 1;
            issues.push("link", "duplicate_admission", format!("hadm_id {} listed twice; first kept", a.hadm_id));
            continue;
        }
        // History for subjects without any ED stay is irrelevant.
        if let Some(s) = subjects.get_mut(&a.subject_id) {
            s.admissions.push(a.clone());
        } else if !patients.contains_key(&a.subject_id) {
            *report.orphans.entry("admissions.csv").or_default() += 1;
        }
    }
    let mut seen_icu = BTreeSet::new();
    let mut icu: Vec<&IcuStayRecord> = tables.icustays.iter().collect();
    icu.sort_by_key(|u| (u.icu_stay_id, u.intime));
    for u in icu {
        if !seen_icu.insert(u.icu_stay_id) {
            *report.duplicates.entry("icustays.csv").or_default() += 1;
            continue;
        }
        if let Some(s) = subjects.get_mut(&u.subject_id) {
            s.icu_stays.push(u.clone());
        } else if !patients.contains_key(&u.subject_id) {
            *report.orphans.entry("icustays.csv").or_default() += 1;
        }
    }
    for d in &tables.diagnoses {
        if let Some(s) = subjects.get_mut(&d.subject_id) {
            s.diagnoses.push(d.clone());
        } else if !patients.contains_key(&d.subject_id) {
            *report.orphans.entry("diagnoses_icd.csv").or_default() += 1;
        }
    }

    for s in subjects.values_mut() {
        s.ed_stays.sort_by_key(|&i| (stays[i].intime, stays[i].stay_id));
        s.admissions.sort_by_key(|a| (a.admittime, a.hadm_id));
        s.icu_stays.sort_by_key(|u| (u.intime, u.icu_stay_id));
        s.diagnoses.sort();
    }

    for (table, n) in &report.orphans {
        log::info!("{table}: {n} orphan rows dropped");
    }

    Ok(LinkedCohort { stays, attachments, subjects, report })
}
