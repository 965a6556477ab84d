use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Part {
    Train,
    Test,
}

impl Part {
    pub fn as_str(self) -> &'static str {
        match self {
            Part::Train => "train",
            Part::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitAssignment {
    pub seed: u64,
    pub test_fraction: f64,
    pub assignment: BTreeMap<i64, Part>,
}

impl SplitAssignment {
    pub fn part(&self, stay_id: i64) -> Option<Part> {
        self.assignment.get(&stay_id).copied()
    }

    pub fn count(&self, part: Part) -> usize {
        self.assignment.values().filter(|&&p| p == part).count()
    }

    /// `split.csv`: a `# seed=...` comment line, then `stay_id,assignment`
    /// rows in stay_id order.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# seed={} test_fraction={}\nstay_id,assignment\n", self.seed, self.test_fraction);
        for (id, part) in &self.assignment {
            let _ = writeln!(out, "{id},{}", part.as_str());
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Parse { path: "split.csv".into(), message: m.into() };
        let mut lines = text.lines();
        let meta = lines.next().and_then(|l| l.strip_prefix("# ")).ok_or_else(|| bad("missing header comment"))?;
        let mut seed = None;
        let mut test_fraction = None;
        for kv in meta.split_whitespace() {
            match kv.split_once('=') {
                Some(("seed", v)) => seed = v.parse().ok(),
                Some(("test_fraction", v)) => test_fraction = v.parse().ok(),
                _ => {}
            }
        }
        if lines.next() != Some("stay_id,assignment") {
            return Err(bad("missing column header"));
        }
        let mut assignment = BTreeMap::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let (id, part) = line.split_once(',').ok_or_else(|| bad(line))?;
            let id: i64 = id.parse().map_err(|_| bad(line))?;
            let part = match part {
                "train" => Part::Train,
                "test" => Part::Test,
                _ => return Err(bad(line)),
            };
            assignment.insert(id, part);
        }
        Ok(SplitAssignment {
            seed: seed.ok_or_else(|| bad("no seed"))?,
            test_fraction: test_fraction.ok_or_else(|| bad("no test_fraction"))?,
            assignment,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

fn take_test(ids: &mut [i64], fraction: f64, seed: u64, stream: u64, out: &mut BTreeMap<i64, Part>) {
    ids.sort_unstable();
    ids.shuffle(&mut rng_from(seed, "split", stream));
    let n_test = (fraction * ids.len() as f64).round() as usize;
    for (k, &id) in ids.iter().enumerate() {
        out.insert(id, if k < n_test { Part::Test } else { Part::Train });
    }
}

/// Random episode-level split. Ids are sorted before a seeded shuffle, so
/// the result does not depend on input order; the first
/// `round(test_fraction * N)` shuffled ids form the test set.
///
/// With `strata` (one label per id), each stratum is split separately;
/// the total test size is then the sum of per-stratum roundings.
pub fn split(stay_ids: &[i64], test_fraction: f64, seed: u64, strata: Option<&[bool]>) -> Result<SplitAssignment> {
    if stay_ids.is_empty() {
        return Err(Error::Data("cannot split an empty cohort".into()));
    }
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(Error::Config(format!("test_fraction {test_fraction} outside [0, 1]")));
    }
    let mut assignment = BTreeMap::new();
    match strata {
        None => take_test(&mut stay_ids.to_vec(), test_fraction, seed, 0, &mut assignment),
        Some(labels) => {
            if labels.len() != stay_ids.len() {
                return Err(Error::Data("strata length differs from id count".into()));
            }
            for (stream, class) in [false, true].into_iter().enumerate() {
                let mut ids: Vec<i64> =
                    stay_ids.iter().zip(labels).filter(|(_, &l)| l == class).map(|(&id, _)| id).collect();
                take_test(&mut ids, test_fraction, seed, stream as u64 + 1, &mut assignment);
            }
        }
    }
    if assignment.len() != stay_ids.len() {
        return Err(Error::Integrity("duplicate stay_id in split input".into()));
    }
    Ok(SplitAssignment { seed, test_fraction, assignment })
}
