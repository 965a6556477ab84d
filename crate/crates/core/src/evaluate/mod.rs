//! Model comparison: discrimination metrics with bootstrap intervals,
//! cutoffs, cohort summaries and rendered reports.

pub mod bootstrap;
pub mod metrics;
pub mod report;
pub mod summary;

pub use bootstrap::{bootstrap_ci, bootstrap_many, percentile, Interval};
pub use metrics::{auprc, auroc, optimal_cutoff, roc_curve, sens_spec_at, RocPoint};
pub use report::{format_threshold, render_svg, Estimate, EvalReport, Metric, ReportRow};
pub use summary::{summarize_cohort, CohortSummary, SummaryCell, SummaryRow};

use crate::error::{Error, Result};

/// What is being evaluated, for the report row.
#[derive(Debug, Clone)]
pub struct RowSpec<'a> {
    pub task: &'a str,
    pub time_point: &'a str,
    pub model: &'a str,
    pub n_variables: usize,
    pub runtime_seconds: Option<f64>,
}

/// Point metrics, optimal cutoff, and bootstrap intervals for one model's
/// test-set scores. The cutoff is chosen on the full test set and held
/// fixed inside the resamples.
pub fn evaluate_scores(spec: &RowSpec, scores: &[f64], labels: &[bool], b: usize, seed: u64) -> Result<ReportRow> {
    let curve = roc_curve(scores, labels)?;
    let (cut, _) = optimal_cutoff(&curve).ok_or(Error::OneClassOnly)?;
    let threshold = cut.threshold;
    let all = |s: &[f64], l: &[bool]| -> Result<Vec<f64>> {
        let (se, sp) = sens_spec_at(s, l, threshold)?;
        Ok(vec![auroc(s, l)?, auprc(s, l)?, se, sp])
    };
    let point = all(scores, labels)?;
    let ci = bootstrap_many(all, scores, labels, b, seed)?;
    let est = |i: usize| Estimate {
        value: point[i],
        low: ci[i].low.min(point[i]),
        high: ci[i].high.max(point[i]),
    };
    let threshold_label = if spec.model == "ESI" {
        // Risk 6 - acuity; report the acuity level like the triage scale.
        format_threshold(6.0 - threshold)
    } else {
        format_threshold(threshold)
    };
    Ok(ReportRow {
        task: spec.task.to_string(),
        time_point: spec.time_point.to_string(),
        model: spec.model.to_string(),
        threshold,
        threshold_label,
        auroc: est(0),
        auprc: est(1),
        sensitivity: est(2),
        specificity: est(3),
        runtime_seconds: spec.runtime_seconds,
        n_variables: spec.n_variables,
    })
}
