//! Exclusions, outlier cleaning, the train/test split and imputation.

mod cleaning;
mod impute;
mod split;

pub use cleaning::{clean_frame, clean_value, Bounds, CleaningConfig, CleaningReport, VariableSpec, DEFAULT_CLEANING};
pub use impute::{fit_imputer, Imputer, ImputeStrategy};
pub use split::{split, Part, SplitAssignment};

use serde::Serialize;

use crate::dataset::Frame;
use crate::error::Result;

pub const MIN_AGE: f64 = 18.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    Minor,
    NoAcuity,
}

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::Minor => "minor",
            ExclusionReason::NoAcuity => "no_acuity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Exclusion {
    pub stay_id: i64,
    pub reason: ExclusionReason,
}

/// Drop visits by patients under 18 and visits without a triage acuity.
/// A visit failing both is reported once, as `Minor`.
pub fn apply_exclusions(master: &Frame) -> Result<(Frame, Vec<Exclusion>)> {
    let age = master.require("age")?;
    let acuity = master.require("triage_acuity")?;
    let mut excluded = Vec::new();
    let mut keep = Vec::with_capacity(master.n_rows());
    for r in 0..master.n_rows() {
        let reason = if age[r].is_nan() || age[r] < MIN_AGE {
            Some(ExclusionReason::Minor)
        } else if acuity[r].is_nan() {
            Some(ExclusionReason::NoAcuity)
        } else {
            None
        };
        match reason {
            Some(reason) => excluded.push(Exclusion { stay_id: master.stay_id[r], reason }),
            None => keep.push(r),
        }
    }
    Ok((master.select_rows(&keep), excluded))
}
