//! Clinical triage scores evaluated from declarative band tables, plus the
//! ESI acuity baseline.
//!
//! The bundled definitions live in `data/scores/*.toml`; the format is
//! described in `news.toml`.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clean_split::CleaningConfig;
use crate::dataset::Frame;
use crate::error::{Error, Result};

pub const DEFAULT_DEFINITIONS: [(&str, &str); 5] = [
    ("NEWS", include_str!("../data/scores/news.toml")),
    ("NEWS2", include_str!("../data/scores/news2.toml")),
    ("REMS", include_str!("../data/scores/rems.toml")),
    ("MEWS", include_str!("../data/scores/mews.toml")),
    ("CART", include_str!("../data/scores/cart.toml")),
];

/// Which set of vitals a score reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VitalsSource {
    #[default]
    Triage,
    Ed,
}

impl VitalsSource {
    pub fn prefix(self) -> &'static str {
        match self {
            VitalsSource::Triage => "triage",
            VitalsSource::Ed => "ed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub low: f64,
    /// Exclusive upper bound; `None` is unbounded.
    pub high: Option<f64>,
    pub points: u32,
}

impl Band {
    fn contains(&self, v: f64) -> bool {
        v >= self.low && self.high.map_or(true, |h| v < h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub variable: String,
    pub bands: Vec<Band>,
}

impl Component {
    pub fn points(&self, value: f64) -> Option<u32> {
        self.bands.iter().find(|b| b.contains(value)).map(|b| b.points)
    }

    pub fn max_points(&self) -> u32 {
        self.bands.iter().map(|b| b.points).max().unwrap_or(0)
    }

    /// Source columns this component reads.
    pub fn columns(&self, source: VitalsSource) -> Vec<String> {
        let p = source.prefix();
        match self.variable.as_str() {
            "age" => vec!["age".into()],
            "map" => vec![format!("{p}_sbp"), format!("{p}_dbp")],
            v => vec![format!("{p}_{v}")],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Omitted {
    pub name: String,
    pub reason: String,
    /// Whether the omitted input still counts as a score variable (it is
    /// scored at a fixed assumed value rather than dropped).
    pub counted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDefinition {
    pub name: String,
    #[serde(rename = "component")]
    pub components: Vec<Component>,
    #[serde(default)]
    pub omitted: Vec<Omitted>,
}

const VARIABLES: [&str; 8] = ["age", "map", "temperature", "heartrate", "resprate", "o2sat", "sbp", "dbp"];

/// Mean arterial pressure estimated from systolic and diastolic pressure.
pub fn mean_arterial_pressure(sbp: f64, dbp: f64) -> f64 {
    dbp + (sbp - dbp) / 3.0
}

/// Points of the band containing `value`.
pub fn band_points(score: &str, component: &Component, value: f64) -> Result<u32> {
    component.points(value).ok_or_else(|| Error::NoBand {
        score: score.to_string(),
        variable: component.variable.clone(),
        value,
    })
}

impl ScoreDefinition {
    pub fn from_toml(text: &str) -> Result<Self> {
        let def: ScoreDefinition = toml::from_str(text).map_err(|e| Error::Config(format!("score definition: {e}")))?;
        def.validate()?;
        Ok(def)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// The five bundled scores.
    pub fn defaults() -> Vec<ScoreDefinition> {
        DEFAULT_DEFINITIONS
            .iter()
            .map(|(name, text)| Self::from_toml(text).unwrap_or_else(|e| panic!("bundled {name} definition: {e}")))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Error::Config(format!("{}: {m}", self.name));
        if self.components.is_empty() {
            return Err(bad("no components".into()));
        }
        for c in &self.components {
            if !VARIABLES.contains(&c.variable.as_str()) {
                return Err(bad(format!("unknown variable `{}`", c.variable)));
            }
            let Some(last) = c.bands.last() else {
                return Err(bad(format!("`{}` has no bands", c.variable)));
            };
            if last.high.is_some() {
                return Err(bad(format!("top band of `{}` must be unbounded", c.variable)));
            }
            for pair in c.bands.windows(2) {
                match pair[0].high {
                    Some(h) if h == pair[1].low && h > pair[0].low => {}
                    _ => return Err(bad(format!("bands of `{}` are not contiguous and ascending", c.variable))),
                }
            }
        }
        Ok(())
    }

    /// Distinct input columns plus omitted inputs scored at an assumed
    /// value.
    pub fn variable_count(&self) -> usize {
        let cols: BTreeSet<String> =
            self.components.iter().flat_map(|c| c.columns(VitalsSource::Triage)).collect();
        cols.len() + self.omitted.iter().filter(|o| o.counted).count()
    }

    pub fn max_total(&self) -> u32 {
        self.components.iter().map(Component::max_points).sum()
    }

    /// Total for one visit; `value(variable)` supplies inputs by variable
    /// name.
    pub fn compute(&self, mut value: impl FnMut(&str) -> f64) -> Result<u32> {
        let mut total = 0;
        for c in &self.components {
            total += band_points(&self.name, c, value(&c.variable))?;
        }
        Ok(total)
    }

    /// Score every row of an imputed frame.
    pub fn score_frame(&self, frame: &Frame, source: VitalsSource) -> Result<Vec<f64>> {
        let p = source.prefix();
        let col = |v: &str| {
            let name = if v == "age" { v.to_string() } else { format!("{p}_{v}") };
            frame.require(&name)
        };
        let mut inputs: Vec<(&str, Vec<f64>)> = Vec::new();
        for c in &self.components {
            let values = match c.variable.as_str() {
                "map" => {
                    let (s, d) = (col("sbp")?, col("dbp")?);
                    s.iter().zip(d).map(|(&s, &d)| mean_arterial_pressure(s, d)).collect()
                }
                v => col(v)?.to_vec(),
            };
            inputs.push((c.variable.as_str(), values));
        }
        (0..frame.n_rows())
            .map(|r| {
                self.compute(|v| inputs.iter().find(|(name, _)| *name == v).map_or(f64::NAN, |(_, x)| x[r]))
                    .map(f64::from)
            })
            .collect()
    }

    /// Every vital-sign component must assign points to every value the
    /// cleaning step can leave behind.
    pub fn check_coverage(&self, cleaning: &CleaningConfig) -> Result<()> {
        for c in &self.components {
            let range = match c.variable.as_str() {
                "age" => Some((0.0, 0.0)),
                "map" => match (cleaning.bounds("sbp"), cleaning.bounds("dbp")) {
                    (Some(s), Some(d)) => Some((
                        mean_arterial_pressure(s.inner_low, d.inner_low).min(d.inner_low),
                        mean_arterial_pressure(s.inner_high, d.inner_high),
                    )),
                    _ => None,
                },
                v => cleaning.bounds(v).map(|b| (b.inner_low, b.inner_high)),
            };
            let Some((lo, _)) = range else {
                return Err(Error::Config(format!("{}: no cleaning bounds for `{}`", self.name, c.variable)));
            };
            // Bands are contiguous and unbounded above, so the lowest band
            // decides coverage.
            if c.bands[0].low > lo {
                return Err(Error::NoBand { score: self.name.clone(), variable: c.variable.clone(), value: lo });
            }
        }
        Ok(())
    }
}

/// ESI acuity as a risk score: higher is sicker (acuity 1 -> 5).
pub fn esi_risk(acuity: i64) -> Result<u32> {
    if (1..=5).contains(&acuity) {
        Ok((6 - acuity) as u32)
    } else {
        Err(Error::BadAcuity(acuity))
    }
}

pub fn esi_frame(frame: &Frame) -> Result<Vec<f64>> {
    frame
        .require("triage_acuity")?
        .iter()
        .map(|&a| {
            if a.fract() != 0.0 || a.is_nan() {
                return Err(Error::BadAcuity(a as i64));
            }
            esi_risk(a as i64).map(f64::from)
        })
        .collect()
}
