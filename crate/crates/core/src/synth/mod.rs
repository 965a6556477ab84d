//! Synthetic raw tables in the ingest schema, with planted outcomes.
//!
//! Each visit's outcomes are drawn first and then realized through the
//! tables: an admission for hospitalization, an ICU stay starting within
//! 12 hours of ED departure or a death before discharge for critical
//! outcomes, and a return visit within 72 hours for reattendance. Visits
//! are spaced so that no planted event leaks into another visit's label.
//! Vitals, acuity, age, complaints and medication counts depend on the
//! outcome stratum so the tasks are learnable.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::Rng as _;
use rand_distr::{Distribution, Exp, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::comorbidity::ComorbidityTables;
use crate::error::{Error, Result};
use crate::ingest::{
    write_raw_tables, AdmissionRecord, DiagnosisRecord, EdStayRecord, Gender, IcuStayRecord, MedreconRecord,
    PatientRecord, PyxisRecord, RawTables, TemperatureUnit, Timestamp, TriageRecord, VitalSignRecord, Vitals,
};
use crate::rng::{rng_from, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub sd: f64,
}

const fn m(mean: f64, sd: f64) -> Moments {
    Moments { mean, sd }
}

/// Age, the six vitals (temperature in Celsius) and pain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VitalsMoments {
    pub age: Moments,
    pub temperature: Moments,
    pub heartrate: Moments,
    pub resprate: Moments,
    pub o2sat: Moments,
    pub sbp: Moments,
    pub dbp: Moments,
    pub pain: Moments,
}

/// Additive mean shift and multiplicative SD factor for one stratum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shift {
    pub mean: f64,
    pub sd_factor: f64,
}

const fn s(mean: f64, sd_factor: f64) -> Shift {
    Shift { mean, sd_factor }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VitalsShift {
    pub age: Shift,
    pub temperature: Shift,
    pub heartrate: Shift,
    pub resprate: Shift,
    pub o2sat: Shift,
    pub sbp: Shift,
    pub dbp: Shift,
    pub pain: Shift,
}

impl VitalsMoments {
    /// Overall cohort moments.
    pub const OVERALL: VitalsMoments = VitalsMoments {
        age: m(52.80, 20.60),
        temperature: m(36.71, 0.54),
        heartrate: m(85.05, 17.46),
        resprate: m(17.57, 2.49),
        o2sat: m(98.40, 2.42),
        sbp: m(134.84, 22.14),
        dbp: m(77.46, 14.71),
        pain: m(4.15, 3.60),
    };

    fn shifted(&self, sh: &VitalsShift, strength: f64) -> VitalsMoments {
        let f = |a: Moments, b: Shift| m(a.mean + strength * b.mean, a.sd * (1.0 + strength * (b.sd_factor - 1.0)));
        VitalsMoments {
            age: f(self.age, sh.age),
            temperature: f(self.temperature, sh.temperature),
            heartrate: f(self.heartrate, sh.heartrate),
            resprate: f(self.resprate, sh.resprate),
            o2sat: f(self.o2sat, sh.o2sat),
            sbp: f(self.sbp, sh.sbp),
            dbp: f(self.dbp, sh.dbp),
            pain: f(self.pain, sh.pain),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Stratum {
    Discharged,
    Hospitalized,
    Critical,
}

impl Stratum {
    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_patients: usize,
    /// When set, generation stops at exactly this many ED visits and
    /// `n_patients` is ignored.
    pub n_visits: Option<usize>,
    /// Mean of the geometric number of visits per patient, before forced
    /// return visits.
    pub mean_visits_per_patient: f64,
    pub prevalence_hospitalization: f64,
    pub prevalence_critical: f64,
    pub prevalence_reattendance: f64,
    /// Share of critical visits that are ICU-only, mortality-only, both.
    pub critical_mix: [f64; 3],
    pub vitals: VitalsMoments,
    pub shift_discharged: VitalsShift,
    pub shift_hospitalized: VitalsShift,
    pub shift_critical: VitalsShift,
    /// Scales every outcome-conditional shift; 0 removes the signal.
    pub signal_strength: f64,
    /// ESI level 1..5 probabilities per stratum.
    pub acuity: [[f64; 5]; 3],
    pub male_fraction: [f64; 3],
    pub minor_fraction: f64,
    pub missing_acuity_fraction: f64,
    pub missing_fraction: f64,
    pub outlier_fraction: f64,
    /// Mean diagnosis codes per admission and share of codes that hit a
    /// comorbidity category.
    pub codes_per_admission: f64,
    pub mapped_code_fraction: f64,
    pub icd9_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        // Stratum shifts are the outcome columns of the cohort table minus
        // its overall column.
        SynthConfig {
            seed: 42,
            n_patients: 1000,
            n_visits: None,
            mean_visits_per_patient: 2.07,
            prevalence_hospitalization: 0.4734,
            prevalence_critical: 0.0592,
            prevalence_reattendance: 0.0347,
            critical_mix: [0.85, 0.059, 0.091],
            vitals: VitalsMoments::OVERALL,
            shift_discharged: VitalsShift {
                age: s(-6.51, 0.94),
                temperature: s(-0.03, 0.91),
                heartrate: s(-1.15, 0.93),
                resprate: s(-0.27, 0.85),
                o2sat: s(0.40, 0.83),
                sbp: s(0.30, 0.93),
                dbp: s(1.30, 0.94),
                pain: s(0.52, 0.99),
            },
            shift_hospitalized: VitalsShift {
                age: s(7.23, 0.95),
                temperature: s(0.04, 1.09),
                heartrate: s(1.27, 1.06),
                resprate: s(0.30, 1.14),
                o2sat: s(-0.45, 1.14),
                sbp: s(-0.33, 1.07),
                dbp: s(-1.45, 1.06),
                pain: s(-0.57, 0.98),
            },
            shift_critical: VitalsShift {
                age: s(12.62, 0.87),
                temperature: s(0.04, 1.22),
                heartrate: s(5.68, 1.20),
                resprate: s(1.34, 1.73),
                o2sat: s(-1.10, 1.53),
                sbp: s(-5.66, 1.18),
                dbp: s(-3.93, 1.12),
                pain: s(-1.07, 0.84),
            },
            signal_strength: 1.0,
            acuity: [
                [0.023, 0.195, 0.653, 0.124, 0.005],
                [0.05, 0.47, 0.465, 0.015, 0.0],
                [0.339, 0.539, 0.121, 0.001, 0.0],
            ],
            male_fraction: [0.424, 0.49, 0.535],
            minor_fraction: 0.01,
            missing_acuity_fraction: 0.005,
            missing_fraction: 0.03,
            outlier_fraction: 0.002,
            codes_per_admission: 6.0,
            mapped_code_fraction: 0.6,
            icd9_fraction: 0.4,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let p = [self.prevalence_hospitalization, self.prevalence_critical, self.prevalence_reattendance];
        if p.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::Config("outcome prevalences must lie in (0, 1)".into()));
        }
        if self.prevalence_critical > self.prevalence_hospitalization
            || self.prevalence_hospitalization + self.prevalence_reattendance > 1.0
        {
            return Err(Error::Config(
                "critical must not exceed hospitalization, and hospitalization plus reattendance must not exceed 1"
                    .into(),
            ));
        }
        if self.n_patients == 0 && self.n_visits.is_none() {
            return Err(Error::Config("n_patients must be at least 1".into()));
        }
        if self.n_visits == Some(0) {
            return Err(Error::Config("n_visits must be at least 1".into()));
        }
        if self.mean_visits_per_patient < 1.0 {
            return Err(Error::Config("mean_visits_per_patient must be at least 1".into()));
        }
        for f in [self.minor_fraction, self.missing_acuity_fraction, self.missing_fraction, self.outlier_fraction] {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::Config("fractions must lie in [0, 1)".into()));
            }
        }
        Ok(())
    }
}

/// Planted labels for one ED visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GroundTruth {
    pub stay_id: i64,
    pub outcome_hospitalization: bool,
    pub outcome_inhospital_mortality: bool,
    pub outcome_icu_transfer_12h: bool,
    pub outcome_critical: bool,
    pub outcome_ed_revisit_3d: bool,
}

pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub tables: RawTables,
    pub truth: Vec<GroundTruth>,
}

#[derive(Debug, Clone, Copy)]
struct PlannedVisit {
    hosp: bool,
    icu12: bool,
    mortality: bool,
    reattend: bool,
}

impl PlannedVisit {
    fn stratum(&self) -> Stratum {
        if self.icu12 || self.mortality {
            Stratum::Critical
        } else if self.hosp {
            Stratum::Hospitalized
        } else {
            Stratum::Discharged
        }
    }
}

const COMPLAINT_TEXT: [&[&str]; 10] = [
    &["CHEST PAIN", "Chest pain", "CP", "Chest tightness"],
    &["ABD PAIN", "Abdominal pain", "RLQ pain", "Epigastric pain"],
    &["HEADACHE", "Headache", "Migraine"],
    &["SOB", "Shortness of breath", "Dyspnea"],
    &["BACK PAIN", "Low back pain"],
    &["COUGH", "Cough"],
    &["N/V", "Nausea", "Vomiting"],
    &["FEVER", "Fever/chills", "Chills"],
    &["SYNCOPE", "Syncope"],
    &["DIZZINESS", "Dizzy", "Vertigo"],
];
const OTHER_COMPLAINTS: [&str; 12] = [
    "Fall",
    "Laceration",
    "ETOH",
    "Rash",
    "Weakness",
    "Leg swelling",
    "Wrist injury",
    "Eye redness",
    "Transfer",
    "Altered mental status",
    "Anxiety",
    "Flank pain",
];
/// Complaint category probabilities per stratum (rest is "other").
const COMPLAINT_P: [[f64; 10]; 3] = [
    [0.059, 0.111, 0.051, 0.010, 0.053, 0.023, 0.024, 0.020, 0.019, 0.027],
    [0.090, 0.125, 0.022, 0.015, 0.025, 0.019, 0.025, 0.050, 0.019, 0.023],
    [0.042, 0.065, 0.024, 0.040, 0.011, 0.016, 0.018, 0.055, 0.014, 0.014],
];
/// Injected implausible values, Celsius for temperature.
const OUTLIERS: [f64; 6] = [80.0, 999.0, 500.0, 300.0, 2000.0, 900.0];
const NOISE_CODES_10: [&str; 10] = ["R51", "R079", "S0190", "Z0000", "Z23", "R1010", "M545", "J069", "N390", "R55"];
const NOISE_CODES_9: [&str; 8] = ["7840", "78650", "V700", "7242", "4659", "5990", "7802", "78900"];

struct Gen<'a> {
    cfg: &'a SynthConfig,
    rng: Rng,
    tables: RawTables,
    truth: Vec<GroundTruth>,
    strata: [VitalsMoments; 3],
    icd_pool: (Vec<String>, Vec<String>),
    next_stay: i64,
    next_hadm: i64,
    next_icu: i64,
}

fn pick(rng: &mut Rng, p: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len()
}

fn hours(h: f64) -> Duration {
    Duration::seconds((h * 3600.0).round() as i64)
}

fn normal(rng: &mut Rng, mo: Moments) -> f64 {
    Normal::new(mo.mean, mo.sd.max(1e-9)).expect("finite moments").sample(rng)
}

fn poisson(rng: &mut Rng, lambda: f64) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive rate").sample(rng) as usize
}

/// Code prefixes that hit a comorbidity category, for ICD-9 and ICD-10.
fn mapped_prefixes(tables: &ComorbidityTables) -> (Vec<String>, Vec<String>) {
    let mut p9 = Vec::new();
    let mut p10 = Vec::new();
    for t in [&tables.charlson, &tables.elixhauser] {
        for c in &t.categories {
            p9.extend(c.icd9.iter().map(|p| p.split('-').next().unwrap_or(p).to_string()));
            p10.extend(c.icd10.iter().map(|p| p.split('-').next().unwrap_or(p).to_string()));
        }
    }
    p9.sort();
    p9.dedup();
    p10.sort();
    p10.dedup();
    (p9, p10)
}

impl<'a> Gen<'a> {
    fn plan_visit(&mut self) -> PlannedVisit {
        let c = self.cfg;
        let reattend = self.rng.random_bool(c.prevalence_reattendance);
        if reattend {
            return PlannedVisit { hosp: false, icu12: false, mortality: false, reattend };
        }
        let hosp = self.rng.random_bool(c.prevalence_hospitalization / (1.0 - c.prevalence_reattendance));
        let critical = hosp && self.rng.random_bool(c.prevalence_critical / c.prevalence_hospitalization);
        let (icu12, mortality) = if critical {
            match pick(&mut self.rng, &c.critical_mix[..2]) {
                0 => (true, false),
                1 => (false, true),
                _ => (true, true),
            }
        } else {
            (false, false)
        };
        PlannedVisit { hosp, icu12, mortality, reattend }
    }

    /// Outcome plans for one patient, capped at `budget` visits.
    fn plan_patient(&mut self, budget: usize) -> Vec<PlannedVisit> {
        let cont = 1.0 - 1.0 / self.cfg.mean_visits_per_patient;
        let mut visits = Vec::new();
        loop {
            let mut v = self.plan_visit();
            let more = v.reattend || (!v.mortality && self.rng.random_bool(cont));
            if visits.len() + 1 == budget {
                // No room for the return visit.
                v.reattend = false;
                visits.push(v);
                break;
            }
            visits.push(v);
            if !more {
                break;
            }
        }
        visits
    }

    fn patient(&mut self, subject_id: i64, plans: &[PlannedVisit]) {
        let first = plans[0].stratum().index();
        let cfg = self.cfg;
        let gender = if self.rng.random_bool(cfg.male_fraction[first]) { Gender::M } else { Gender::F };
        let age = if self.rng.random_bool(cfg.minor_fraction) {
            self.rng.random_range(10..18)
        } else {
            normal(&mut self.rng, self.strata[first].age).round().clamp(18.0, 91.0) as i32
        };
        let anchor_year = self.rng.random_range(2110..2180);
        let start = NaiveDate::from_ymd_opt(anchor_year, 1, 1).expect("valid date").and_hms_opt(0, 0, 0).expect("valid time")
            + Duration::minutes(self.rng.random_range(0..300 * 24 * 60));

        let mut t = start;
        let mut dod = None;
        for (k, plan) in plans.iter().enumerate() {
            let end = self.visit(subject_id, t, plan);
            if plan.mortality {
                dod = Some(end.date());
            }
            if k + 1 < plans.len() {
                t = if plan.reattend {
                    // Return 12-71h after ED departure: inside the 72h
                    // window and clear of this visit's 12h ICU window.
                    end + hours(self.rng.random_range(12.0..71.0))
                } else {
                    end + Duration::days(4) + hours(24.0 * Exp::new(1.0 / 120.0).expect("rate").sample(&mut self.rng))
                };
            }
        }
        self.tables.patients.push(PatientRecord { subject_id, gender, anchor_age: age, anchor_year, dod });
    }

    /// Emits one visit starting at `intime`; returns the time after which
    /// the next visit may be placed (ED departure, or hospital discharge).
    fn visit(&mut self, subject_id: i64, intime: Timestamp, plan: &PlannedVisit) -> Timestamp {
        let cfg = self.cfg;
        let stratum = plan.stratum();
        let si = stratum.index();
        let stay_id = self.next_stay;
        self.next_stay += 1;

        let los_median = [4.5, 6.5, 5.5][si];
        let los_h = LogNormal::new(f64::ln(los_median), 0.5).expect("sigma").sample(&mut self.rng).clamp(0.5, 48.0);
        let outtime = intime + hours(los_h);
        let hadm_id = plan.hosp.then(|| {
            self.next_hadm += 1;
            self.next_hadm
        });
        self.tables.edstays.push(EdStayRecord {
            subject_id,
            stay_id,
            hadm_id,
            intime,
            outtime: Some(outtime),
            disposition: if plan.hosp { "ADMITTED" } else { "HOME" }.into(),
        });

        // Triage.
        let mo = self.strata[si];
        let triage_vitals = self.draw_vitals(&mo);
        let pain = normal(&mut self.rng, mo.pain).round().clamp(0.0, 10.0);
        let pain = self.maybe(pain);
        let acuity = if self.rng.random_bool(cfg.missing_acuity_fraction) {
            None
        } else {
            Some(pick(&mut self.rng, &cfg.acuity[si]).min(4) as u8 + 1)
        };
        let complaint = self.complaint(si);
        self.tables.triage.push(TriageRecord {
            subject_id: Some(subject_id),
            stay_id,
            vitals: triage_vitals,
            pain,
            acuity,
            chiefcomplaint: complaint,
        });

        // Repeat vitals during the stay, drifting toward the triage values.
        let n_vs = self.rng.random_range(1..=4);
        for j in 0..n_vs {
            let at = intime + hours(los_h * (j as f64 + 0.5) / n_vs as f64);
            let mut v = self.draw_vitals(&mo).as_array();
            for (k, (x, base)) in v.iter_mut().zip(triage_vitals.as_array()).enumerate() {
                if let (Some(x), Some(b)) = (x.as_mut(), base) {
                    if *x != OUTLIERS[k] && b != OUTLIERS[k] {
                        *x = ((*x + 2.0 * b) / 3.0 * 10.0).round() / 10.0;
                    }
                }
            }
            let pain = normal(&mut self.rng, mo.pain).round().clamp(0.0, 10.0);
            let pain = self.maybe(pain);
            self.tables.vitalsign.push(VitalSignRecord {
                subject_id: Some(subject_id),
                stay_id,
                charttime: at,
                vitals: Vitals::from_array(v),
                pain,
            });
        }

        // Medications.
        let n_rec = poisson(&mut self.rng, [3.0, 6.0, 7.0][si]);
        for r in 0..n_rec {
            self.tables.medrecon.push(MedreconRecord { subject_id: Some(subject_id), stay_id, name: format!("med_{}", r % 40) });
        }
        let n_pyx = poisson(&mut self.rng, [1.5, 3.5, 7.0][si]);
        for r in 0..n_pyx {
            let at = intime + hours(los_h * self.rng.random::<f64>());
            self.tables.pyxis.push(PyxisRecord {
                subject_id: Some(subject_id),
                stay_id,
                charttime: Some(at),
                name: format!("drug_{}", r % 60),
            });
        }

        let mut after = outtime;
        let mut icu12 = false;
        if let Some(hadm_id) = hadm_id {
            let admittime = outtime;
            let mut dischtime = admittime + hours(self.rng.random_range(24.0..24.0 * 14.0));
            let mut icu_in = None;
            if plan.icu12 {
                icu_in = Some(outtime + hours(self.rng.random_range(0.0..11.5)));
            } else if self.rng.random_bool(0.05) {
                // Late ICU transfer, outside the 12h window.
                icu_in = Some(outtime + hours(self.rng.random_range(13.0..48.0)));
            }
            if let Some(icu_in) = icu_in {
                let icu_out = icu_in + hours(self.rng.random_range(12.0..120.0));
                dischtime = dischtime.max(icu_out + Duration::days(1));
                self.tables.icustays.push(IcuStayRecord {
                    subject_id,
                    hadm_id,
                    icu_stay_id: self.next_icu,
                    intime: icu_in,
                    outtime: Some(icu_out),
                });
                self.next_icu += 1;
                icu12 = icu_in <= outtime + Duration::hours(12);
            }
            let deathtime = plan.mortality.then_some(dischtime);
            self.tables.admissions.push(AdmissionRecord { subject_id, hadm_id, admittime, dischtime, deathtime });
            self.diagnoses(subject_id, hadm_id, si);
            after = dischtime;
        }
        debug_assert_eq!(icu12, plan.icu12);

        self.truth.push(GroundTruth {
            stay_id,
            outcome_hospitalization: plan.hosp,
            outcome_inhospital_mortality: plan.mortality,
            outcome_icu_transfer_12h: icu12,
            outcome_critical: plan.mortality || icu12,
            outcome_ed_revisit_3d: plan.reattend,
        });
        after
    }

    fn maybe(&mut self, v: f64) -> Option<f64> {
        (!self.rng.random_bool(self.cfg.missing_fraction)).then_some(v)
    }

    fn draw_vitals(&mut self, mo: &VitalsMoments) -> Vitals {
        let moments = [mo.temperature, mo.heartrate, mo.resprate, mo.o2sat, mo.sbp, mo.dbp];
        let mut out = [None; 6];
        for (k, slot) in out.iter_mut().enumerate() {
            let mut v = normal(&mut self.rng, moments[k]);
            v = match k {
                0 => (v * 10.0).round() / 10.0,
                3 => v.round().min(100.0),
                _ => v.round().max(1.0),
            };
            if self.rng.random_bool(self.cfg.outlier_fraction) {
                v = OUTLIERS[k];
            }
            *slot = self.maybe(v);
        }
        Vitals::from_array(out)
    }

    fn complaint(&mut self, si: usize) -> Option<String> {
        if self.rng.random_bool(self.cfg.missing_fraction) {
            return None;
        }
        let c = pick(&mut self.rng, &COMPLAINT_P[si]);
        let text = match COMPLAINT_TEXT.get(c) {
            Some(variants) => variants[self.rng.random_range(0..variants.len())],
            None => OTHER_COMPLAINTS[self.rng.random_range(0..OTHER_COMPLAINTS.len())],
        };
        Some(text.to_string())
    }

    fn diagnoses(&mut self, subject_id: i64, hadm_id: i64, si: usize) {
        let n = 1 + poisson(&mut self.rng, self.cfg.codes_per_admission * [1.0, 1.0, 1.4][si]);
        let icd9 = self.rng.random_bool(self.cfg.icd9_fraction);
        for seq in 0..n {
            let mapped = self.rng.random_bool(self.cfg.mapped_code_fraction);
            let code = match (mapped, icd9) {
                (true, true) => self.icd_pool.0[self.rng.random_range(0..self.icd_pool.0.len())].clone(),
                (true, false) => self.icd_pool.1[self.rng.random_range(0..self.icd_pool.1.len())].clone(),
                (false, true) => NOISE_CODES_9[self.rng.random_range(0..NOISE_CODES_9.len())].to_string(),
                (false, false) => NOISE_CODES_10[self.rng.random_range(0..NOISE_CODES_10.len())].to_string(),
            };
            // Pad short prefixes with a digit so codes look like full codes.
            let code = if code.len() < 4 { format!("{code}{}", self.rng.random_range(0..10)) } else { code };
            self.tables.diagnoses.push(DiagnosisRecord {
                subject_id,
                hadm_id,
                seq_num: seq as i32 + 1,
                icd_code: code,
                icd_version: if icd9 { 9 } else { 10 },
            });
        }
    }
}

pub fn generate_cohort(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let strength = cfg.signal_strength;
    let mut g = Gen {
        cfg,
        rng: rng_from(cfg.seed, "synth", 0),
        tables: RawTables::default(),
        truth: Vec::new(),
        strata: [
            cfg.vitals.shifted(&cfg.shift_discharged, strength),
            cfg.vitals.shifted(&cfg.shift_hospitalized, strength),
            cfg.vitals.shifted(&cfg.shift_critical, strength),
        ],
        icd_pool: mapped_prefixes(&ComorbidityTables::default()),
        next_stay: 30_000_000,
        next_hadm: 20_000_000,
        next_icu: 40_000_000,
    };
    let mut subject = 10_000_000i64;
    let mut visits = 0usize;
    loop {
        let budget = match cfg.n_visits {
            Some(n) if visits >= n => break,
            Some(n) => n - visits,
            None if (subject - 10_000_000) as usize >= cfg.n_patients => break,
            None => usize::MAX,
        };
        subject += 1;
        let plans = g.plan_patient(budget);
        visits += plans.len();
        g.patient(subject, &plans);
    }
    Ok(SynthOutput { tables: g.tables, truth: g.truth })
}

/// Writes the nine tables (temperatures in Fahrenheit) and the planted
/// labels.
pub fn write_cohort(dir: &Path, out: &SynthOutput) -> Result<()> {
    write_raw_tables(dir, &out.tables, TemperatureUnit::Fahrenheit)?;
    let path = dir.join(GROUND_TRUTH_FILE);
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    for t in &out.truth {
        w.serialize(t).map_err(|e| Error::Csv { path: path.display().to_string(), source: e })?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

/// Ground truth keyed by stay_id.
pub fn read_ground_truth(path: &Path) -> Result<BTreeMap<i64, [bool; 5]>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Csv { path: path.display().to_string(), source: e })?;
    let mut out = BTreeMap::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Csv { path: path.display().to_string(), source: e })?;
        let b = |i: usize| rec.get(i) == Some("true");
        let id: i64 = rec
            .get(0)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Parse { path: path.display().to_string(), message: "bad stay_id".into() })?;
        out.insert(id, [b(1), b(2), b(3), b(4), b(5)]);
    }
    Ok(out)
}
