//! Append-only record of per-row problems found while processing data.
//!
//! Stages push issues here instead of failing; the CLI writes the per-kind
//! counts into the run manifest.

use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub stage: &'static str,
    pub kind: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct IssueLog {
    issues: Vec<Issue>,
}

impl IssueLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, stage: &'static str, kind: &'static str, message: impl Into<String>) {
        let message = message.into();
        log::warn!("[{stage}] {kind}: {message}");
        self.issues.push(Issue { stage, kind, message });
    }

    pub fn extend(&mut self, other: IssueLog) {
        self.issues.extend(other.issues);
    }

    pub fn issues(&self) -> &[Issue] {
        &self.issues
    }

    pub fn len(&self) -> usize {
        self.issues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn count(&self, kind: &str) -> usize {
        self.issues.iter().filter(|i| i.kind == kind).count()
    }

    /// `stage/kind` -> count, sorted by key.
    pub fn counts(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for issue in &self.issues {
            *out.entry(format!("{}/{}", issue.stage, issue.kind)).or_insert(0) += 1;
        }
        out
    }
}
