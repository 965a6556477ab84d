//! Keyword matching of free-text chief complaints.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

pub const DEFAULT_COMPLAINTS: &str = include_str!("../../data/chief_complaints.toml");

#[derive(Debug, Deserialize)]
struct File {
    category: Vec<Category>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Category {
    pub name: String,
    pub keywords: Vec<String>,
}

/// Chief-complaint categories with their keyword and alias lists; the
/// matching rule is documented in `data/chief_complaints.toml`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplaintMatcher {
    categories: Vec<Category>,
    /// Normalized keywords per category.
    needles: Vec<Vec<String>>,
}

fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push(' ');
    for c in text.chars() {
        let c = c.to_ascii_lowercase();
        let c = if c.is_ascii_alphanumeric() || c == '/' { c } else { ' ' };
        if !(c == ' ' && out.ends_with(' ')) {
            out.push(c);
        }
    }
    if !out.ends_with(' ') {
        out.push(' ');
    }
    out
}

impl ComplaintMatcher {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: File = toml::from_str(text).map_err(|e| Error::Config(format!("chief complaints: {e}")))?;
        let mut needles = Vec::with_capacity(file.category.len());
        for c in &file.category {
            if c.keywords.is_empty() {
                return Err(Error::Config(format!("chief complaint `{}` has no keywords", c.name)));
            }
            let list = c
                .keywords
                .iter()
                .map(|k| {
                    // Keep one trailing space if the keyword asked for a whole word.
                    let whole = k.ends_with(' ');
                    let n = normalize(k);
                    let n = n.trim_start();
                    if whole { n.to_string() } else { n.trim_end().to_string() }
                })
                .collect();
            needles.push(list);
        }
        Ok(ComplaintMatcher { categories: file.category, needles })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.categories.iter().map(|c| c.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// One flag per category; missing text matches nothing.
    pub fn match_text(&self, text: Option<&str>) -> Vec<bool> {
        let Some(text) = text else {
            return vec![false; self.len()];
        };
        let hay = normalize(text);
        let bytes = hay.as_bytes();
        let at_word_start = |n: &str| hay.match_indices(n).any(|(i, _)| matches!(bytes[i - 1], b' ' | b'/'));
        self.needles.iter().map(|list| list.iter().any(|n| at_word_start(n))).collect()
    }
}

impl Default for ComplaintMatcher {
    fn default() -> Self {
        Self::from_toml(DEFAULT_COMPLAINTS).expect("bundled complaint table is valid")
    }
}
