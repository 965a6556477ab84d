//! Percentile bootstrap confidence intervals.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

/// Percentile `q` in [0, 1] of `sorted`, interpolating linearly between
/// order statistics at position `q * (n - 1)`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn degenerate(e: &Error) -> bool {
    matches!(e, Error::OneClassOnly | Error::NoPositives)
}

/// Resamples `(score, label)` pairs `b` times and evaluates `metric`, which
/// returns several values per resample. Resample `i` draws from its own
/// stream, so results do not depend on the thread count. A resample on
/// which the metric is undefined is redrawn; more than `10 * b` redraws in
/// total fails with `ResampleExhausted`. Returns one 95% interval per
/// metric value.
pub fn bootstrap_many<F>(metric: F, scores: &[f64], labels: &[bool], b: usize, seed: u64) -> Result<Vec<Interval>>
where
    F: Fn(&[f64], &[bool]) -> Result<Vec<f64>> + Sync,
{
    let n = scores.len();
    let width = metric(scores, labels)?.len();
    let cap = 10 * b;
    let draws: Vec<Result<(Vec<f64>, usize)>> = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from(seed, "bootstrap", i as u64);
            let mut s = vec![0.0; n];
            let mut l = vec![false; n];
            for attempt in 0..=cap {
                for k in 0..n {
                    let j = rng.random_range(0..n);
                    s[k] = scores[j];
                    l[k] = labels[j];
                }
                match metric(&s, &l) {
                    Ok(v) => return Ok((v, attempt)),
                    Err(e) if degenerate(&e) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::ResampleExhausted { wanted: b, attempts: cap })
        })
        .collect();
    let mut values = vec![Vec::with_capacity(b); width];
    let mut redraws = 0;
    for d in draws {
        let (v, r) = d?;
        redraws += r;
        for (col, x) in values.iter_mut().zip(v) {
            col.push(x);
        }
    }
    if redraws > cap {
        return Err(Error::ResampleExhausted { wanted: b, attempts: redraws });
    }
    Ok(values
        .into_iter()
        .map(|mut col| {
            col.sort_by(f64::total_cmp);
            Interval { low: percentile(&col, 0.025), high: percentile(&col, 0.975) }
        })
        .collect())
}

pub fn bootstrap_ci<F>(metric: F, scores: &[f64], labels: &[bool], b: usize, seed: u64) -> Result<Interval>
where
    F: Fn(&[f64], &[bool]) -> Result<f64> + Sync,
{
    let ci = bootstrap_many(|s, l| metric(s, l).map(|v| vec![v]), scores, labels, b, seed)?;
    Ok(ci[0])
}
