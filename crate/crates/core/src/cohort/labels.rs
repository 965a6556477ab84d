//! Per-visit variables and outcome labels.

use chrono::{Datelike, Duration};

use crate::ingest::{AdmissionRecord, EdStayRecord, IcuStayRecord, PatientRecord, Timestamp, VitalSignRecord, Vitals};

pub const HISTORY_WINDOWS_DAYS: [i64; 3] = [30, 90, 365];
pub const ICU_WINDOW_HOURS: i64 = 12;
pub const REVISIT_WINDOW_HOURS: i64 = 72;

/// Age at the visit. Years before the anchor year never lower the age
/// below `anchor_age`.
pub fn compute_age(patient: &PatientRecord, ed_intime: Timestamp) -> i32 {
    let shift = (ed_intime.year() - patient.anchor_year).max(0);
    (patient.anchor_age + shift).max(0)
}

/// Events in `[t - window_days, t)`. `event_times` must be sorted.
pub fn count_prior_events(event_times: &[Timestamp], t: Timestamp, window_days: i64) -> u32 {
    let start = t - Duration::days(window_days);
    let lo = event_times.partition_point(|&e| e < start);
    let hi = event_times.partition_point(|&e| e < t);
    (hi - lo) as u32
}

/// Counts for each of [`HISTORY_WINDOWS_DAYS`].
pub fn history_counts(event_times: &[Timestamp], t: Timestamp) -> [u32; 3] {
    HISTORY_WINDOWS_DAYS.map(|w| count_prior_events(event_times, t, w))
}

/// Last observed value of each vital, field by field. `vitals` must be
/// sorted by charttime.
pub fn extract_ed_vitals(vitals: &[VitalSignRecord]) -> Vitals {
    let mut last = [None; 6];
    for v in vitals {
        for (slot, value) in last.iter_mut().zip(v.vitals.as_array()) {
            if value.is_some() {
                *slot = value;
            }
        }
    }
    Vitals::from_array(last)
}

/// `admission` is the stay's resolved admission, if any.
pub fn label_hospitalization(admission: Option<&AdmissionRecord>) -> bool {
    admission.is_some()
}

pub fn label_inpatient_mortality(admission: Option<&AdmissionRecord>, patient: &PatientRecord) -> bool {
    let Some(adm) = admission else {
        return false;
    };
    if let Some(death) = adm.deathtime {
        if death <= adm.dischtime {
            return true;
        }
    }
    matches!(patient.dod, Some(dod) if dod <= adm.dischtime.date())
}

/// Some ICU stay starts in `[ED intime, ED outtime + 12h]`.
pub fn label_icu_transfer_12h(stay: &EdStayRecord, icu_stays: &[IcuStayRecord]) -> bool {
    let Some(out) = stay.outtime else {
        return false;
    };
    let end = out + Duration::hours(ICU_WINDOW_HOURS);
    icu_stays.iter().any(|icu| icu.intime >= stay.intime && icu.intime <= end)
}

pub fn label_critical(mortality: bool, icu12: bool) -> bool {
    mortality || icu12
}

/// The subject's next ED visit starts within (0, 72h] of this one ending.
pub fn label_ed_reattendance_72h(stay: &EdStayRecord, next: Option<&EdStayRecord>) -> bool {
    let (Some(out), Some(next)) = (stay.outtime, next) else {
        return false;
    };
    let gap = next.intime - out;
    gap > Duration::zero() && gap <= Duration::hours(REVISIT_WINDOW_HOURS)
}

/// ED length of stay in hours, floored at zero.
pub fn ed_los_hours(stay: &EdStayRecord) -> f64 {
    stay.outtime.map_or(0.0, |out| ((out - stay.intime).num_seconds() as f64 / 3600.0).max(0.0))
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;

    use super::*;
    use crate::ingest::Gender;

    fn at(d: u32, h: u32) -> Timestamp {
        NaiveDate::from_ymd_opt(2150, 3, d).unwrap().and_hms_opt(h, 0, 0).unwrap()
    }

    fn patient(anchor_age: i32, anchor_year: i32) -> PatientRecord {
        PatientRecord { subject_id: 1, gender: Gender::F, anchor_age, anchor_year, dod: None }
    }

    fn year(y: i32) -> Timestamp {
        NaiveDate::from_ymd_opt(y, 6, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
    }

    fn stay(intime: Timestamp, outtime: Timestamp) -> EdStayRecord {
        EdStayRecord {
            subject_id: 1,
            stay_id: 1,
            hadm_id: None,
            intime,
            outtime: Some(outtime),
            disposition: "HOME".into(),
        }
    }

    fn admission(dischtime: Timestamp, deathtime: Option<Timestamp>) -> AdmissionRecord {
        AdmissionRecord { subject_id: 1, hadm_id: 5, admittime: dischtime - Duration::days(2), dischtime, deathtime }
    }

    fn icu(intime: Timestamp) -> IcuStayRecord {
        IcuStayRecord { subject_id: 1, hadm_id: 5, icu_stay_id: 9, intime, outtime: None }
    }

    #[test]
    fn age() {
        assert_eq!(compute_age(&patient(50, 2150), year(2153)), 53);
        assert_eq!(compute_age(&patient(50, 2150), year(2150)), 50);
        assert_eq!(compute_age(&patient(50, 2150), year(2149)), 50);
    }

    #[test]
    fn prior_event_windows() {
        let t = at(20, 12) + Duration::days(400);
        let events = [t - Duration::days(400), t - Duration::days(45), t - Duration::days(10)];
        assert_eq!(count_prior_events(&events, t, 30), 1);
        assert_eq!(count_prior_events(&events, t, 90), 2);
        assert_eq!(count_prior_events(&events, t, 365), 2);
        assert_eq!(history_counts(&[t], t), [0, 0, 0]);
    }

    #[test]
    fn ed_vitals_last_per_field() {
        let row = |h, v: Vitals| VitalSignRecord { subject_id: None, stay_id: 1, charttime: at(1, h), vitals: v, pain: None };
        let a = row(10, Vitals { heartrate: Some(80.0), ..Default::default() });
        let b = row(12, Vitals { heartrate: Some(90.0), ..Default::default() });
        assert_eq!(extract_ed_vitals(&[a.clone(), b]).heartrate, Some(90.0));

        let c = row(12, Vitals { sbp: Some(120.0), ..Default::default() });
        let got = extract_ed_vitals(&[a, c]);
        assert_eq!((got.heartrate, got.sbp), (Some(80.0), Some(120.0)));

        assert_eq!(extract_ed_vitals(&[]), Vitals::default());
    }

    #[test]
    fn mortality() {
        let p = patient(60, 2150);
        assert!(!label_inpatient_mortality(None, &p));
        let dis = at(5, 12);
        assert!(label_inpatient_mortality(Some(&admission(dis, Some(dis - Duration::hours(1)))), &p));
        let late = PatientRecord { dod: Some(dis.date() + Duration::days(3)), ..p.clone() };
        assert!(!label_inpatient_mortality(Some(&admission(dis, None)), &late));
        let same_day = PatientRecord { dod: Some(dis.date()), ..p };
        assert!(label_inpatient_mortality(Some(&admission(dis, None)), &same_day));
    }

    #[test]
    fn icu_transfer() {
        let s = stay(at(1, 6), at(1, 10));
        assert!(label_icu_transfer_12h(&s, &[icu(at(1, 18))]));
        assert!(!label_icu_transfer_12h(&s, &[icu(at(2, 23))]));
        assert!(label_icu_transfer_12h(&s, &[icu(at(1, 10) - Duration::minutes(30))]));
        assert!(label_icu_transfer_12h(&s, &[icu(at(1, 22))]));
        assert!(!label_icu_transfer_12h(&s, &[icu(at(1, 22) + Duration::seconds(1))]));
        assert!(!label_icu_transfer_12h(&s, &[icu(at(1, 5))]));
    }

    #[test]
    fn critical_is_or() {
        for m in [false, true] {
            for i in [false, true] {
                assert_eq!(label_critical(m, i), m || i);
            }
        }
    }

    #[test]
    fn reattendance() {
        let s = stay(at(1, 0), at(1, 6));
        let next = |gap_h| stay(at(1, 6) + Duration::hours(gap_h), at(1, 6) + Duration::hours(gap_h + 2));
        assert!(label_ed_reattendance_72h(&s, Some(&next(48))));
        assert!(label_ed_reattendance_72h(&s, Some(&next(72))));
        assert!(!label_ed_reattendance_72h(&s, Some(&next(80))));
        assert!(!label_ed_reattendance_72h(&s, Some(&next(0))));
        assert!(!label_ed_reattendance_72h(&s, None));
    }

    #[test]
    fn los_is_clamped() {
        assert_eq!(ed_los_hours(&stay(at(1, 6), at(1, 9))), 3.0);
        assert_eq!(ed_los_hours(&stay(at(1, 9), at(1, 6))), 0.0);
    }
}
