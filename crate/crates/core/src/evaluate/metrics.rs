//! Discrimination metrics. A prediction is positive when `score >= threshold`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn class_counts(labels: &[bool]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&l| l).count();
    (pos, labels.len() - pos)
}

fn check_lengths(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Data(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::Data(format!("score {s} is not a number")));
    }
    Ok(())
}

/// Indices sorted by descending score.
fn descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

/// Walks groups of tied scores in descending order, yielding
/// (score, positives in group, negatives in group).
fn tie_groups<'a>(scores: &'a [f64], labels: &'a [bool], order: &'a [usize]) -> impl Iterator<Item = (f64, usize, usize)> + 'a {
    let mut i = 0;
    std::iter::from_fn(move || {
        if i >= order.len() {
            return None;
        }
        let s = scores[order[i]];
        let (mut p, mut n) = (0, 0);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                p += 1;
            } else {
                n += 1;
            }
            i += 1;
        }
        Some((s, p, n))
    })
}

/// Area under the ROC curve via the rank-sum statistic; ties count half.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let (np, nn) = class_counts(labels);
    if np == 0 || nn == 0 {
        return Err(Error::OneClassOnly);
    }
    let order = descending(scores);
    // Count (pos, neg) pairs won by the positive, walking from the top:
    // each negative group loses to every positive seen above it.
    let mut pos_above = 0.0;
    let mut wins = 0.0;
    for (_, p, n) in tie_groups(scores, labels, &order) {
        wins += n as f64 * (pos_above + 0.5 * p as f64);
        pos_above += p as f64;
    }
    Ok(wins / (np as f64 * nn as f64))
}

/// Average precision: recall steps times precision, one step per group of
/// tied scores.
pub fn auprc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let (np, _) = class_counts(labels);
    if np == 0 {
        return Err(Error::NoPositives);
    }
    let order = descending(scores);
    let (mut tp, mut fp, mut ap) = (0usize, 0usize, 0.0);
    for (_, p, n) in tie_groups(scores, labels, &order) {
        let prev = tp;
        tp += p;
        fp += n;
        if p > 0 {
            ap += (tp - prev) as f64 / np as f64 * (tp as f64 / (tp + fp) as f64);
        }
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// One point per distinct score, from (0, 0) at threshold +inf down to
/// (1, 1) at the smallest score.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<Vec<RocPoint>> {
    check_lengths(scores, labels)?;
    let (np, nn) = class_counts(labels);
    if np == 0 || nn == 0 {
        return Err(Error::OneClassOnly);
    }
    let order = descending(scores);
    let mut curve = vec![RocPoint { fpr: 0.0, tpr: 0.0, threshold: f64::INFINITY }];
    let (mut tp, mut fp) = (0, 0);
    for (s, p, n) in tie_groups(scores, labels, &order) {
        tp += p;
        fp += n;
        curve.push(RocPoint { fpr: fp as f64 / nn as f64, tpr: tp as f64 / np as f64, threshold: s });
    }
    Ok(curve)
}

/// The finite-threshold point closest to (FPR 0, TPR 1); ties go to the
/// lower threshold. Returns the point and its distance.
pub fn optimal_cutoff(curve: &[RocPoint]) -> Option<(RocPoint, f64)> {
    let mut best: Option<(RocPoint, f64)> = None;
    for pt in curve.iter().filter(|p| p.threshold.is_finite()) {
        let d = ((1.0 - pt.tpr).powi(2) + pt.fpr.powi(2)).sqrt();
        match best {
            Some((b, bd)) if d > bd || (d == bd && pt.threshold > b.threshold) => {}
            _ => best = Some((*pt, d)),
        }
    }
    best
}

pub fn sens_spec_at(scores: &[f64], labels: &[bool], threshold: f64) -> Result<(f64, f64)> {
    check_lengths(scores, labels)?;
    let (np, nn) = class_counts(labels);
    if np == 0 || nn == 0 {
        return Err(Error::OneClassOnly);
    }
    let (mut tp, mut tn) = (0, 0);
    for (&s, &l) in scores.iter().zip(labels) {
        match (l, s >= threshold) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            _ => {}
        }
    }
    Ok((tp as f64 / np as f64, tn as f64 / nn as f64))
}
