//! Pipeline configuration file.
//!
//! Relative paths are resolved against the directory holding the config
//! file. Optional resource paths fall back to the bundled tables.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clean_split::{CleaningConfig, ImputeStrategy};
use crate::cohort::{CohortOptions, ComplaintMatcher};
use crate::comorbidity::{ComorbidityTables, IcdMappingTable, LookbackOptions};
use crate::error::{Error, Result};
use crate::ingest::TemperatureUnit;
use crate::models::{Manifest, ModelConfig, ModelKind, TimePoint};
use crate::scores::ScoreDefinition;
use crate::synth::SynthConfig;

/// Whether report runtimes are measured. `None` leaves the Runtime column
/// empty so reports are reproducible byte for byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Timing {
    #[default]
    Wall,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Evaluation {
    /// Outcome column without the `outcome_` prefix.
    pub task: String,
    pub time_point: TimePoint,
    /// Also evaluate ESI and the early warning scores.
    #[serde(default = "yes")]
    pub scores: bool,
}

fn yes() -> bool {
    true
}

impl Evaluation {
    pub fn outcome_column(&self) -> String {
        format!("outcome_{}", self.task)
    }

    pub fn key(&self) -> String {
        format!("{}@{}", self.task, self.time_point.as_str())
    }
}

pub fn default_evaluations() -> Vec<Evaluation> {
    let e = |task: &str, tp, scores| Evaluation { task: task.into(), time_point: tp, scores };
    vec![
        e("hospitalization", TimePoint::Triage, true),
        e("critical", TimePoint::Triage, true),
        e("ed_revisit_3d", TimePoint::Disposition, false),
        e("critical", TimePoint::Disposition, true),
    ]
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifestPaths {
    pub triage: Option<PathBuf>,
    pub disposition: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComorbidityPaths {
    pub charlson: Option<PathBuf>,
    pub elixhauser: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Directory with the nine raw tables.
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub test_fraction: f64,
    /// Split each outcome class separately on this outcome column.
    pub stratify_on: Option<String>,
    pub lookback_years: u32,
    pub include_index_admission: bool,
    pub temperature_unit: TemperatureUnit,
    pub imputation: ImputeStrategy,
    pub cleaning: Option<PathBuf>,
    pub chief_complaints: Option<PathBuf>,
    pub comorbidity: ComorbidityPaths,
    /// Early warning score definitions; empty means the bundled five.
    pub scores: Vec<PathBuf>,
    pub manifests: ManifestPaths,
    pub bootstrap: usize,
    pub timing: Timing,
    pub evaluations: Vec<Evaluation>,
    pub models: ModelConfig,
    pub model_kinds: Vec<ModelKind>,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input_dir: "raw".into(),
            output_dir: "out".into(),
            seed: 42,
            test_fraction: 0.2,
            stratify_on: None,
            lookback_years: 5,
            include_index_admission: false,
            temperature_unit: TemperatureUnit::Fahrenheit,
            imputation: ImputeStrategy::Median,
            cleaning: None,
            chief_complaints: None,
            comorbidity: ComorbidityPaths::default(),
            scores: Vec::new(),
            manifests: ManifestPaths::default(),
            bootstrap: 100,
            timing: Timing::Wall,
            evaluations: default_evaluations(),
            models: ModelConfig::default(),
            model_kinds: ModelKind::ALL.to_vec(),
            synth: SynthConfig::default(),
        }
    }
}

/// Loaded, validated tables the stages need.
#[derive(Debug, Clone)]
pub struct Resources {
    pub cohort: CohortOptions,
    pub cleaning: CleaningConfig,
    pub scores: Vec<ScoreDefinition>,
    pub triage_manifest: Manifest,
    pub disposition_manifest: Manifest,
}

impl Resources {
    pub fn manifest(&self, tp: TimePoint) -> &Manifest {
        match tp {
            TimePoint::Triage => &self.triage_manifest,
            TimePoint::Disposition => &self.disposition_manifest,
        }
    }
}

fn check_exists(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} {} does not exist", path.display())))
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse `path` and resolve relative paths against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.resolve_relative(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.input_dir);
        fix(&mut self.output_dir);
        for p in [
            &mut self.cleaning,
            &mut self.chief_complaints,
            &mut self.comorbidity.charlson,
            &mut self.comorbidity.elixhauser,
            &mut self.manifests.triage,
            &mut self.manifests.disposition,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        self.scores.iter_mut().for_each(fix);
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!("test_fraction {} must lie in (0, 1)", self.test_fraction)));
        }
        if self.bootstrap == 0 {
            return Err(Error::Config("bootstrap must be at least 1".into()));
        }
        if self.model_kinds.is_empty() {
            return Err(Error::Config("model_kinds is empty".into()));
        }
        const TASKS: [&str; 5] =
            ["hospitalization", "inhospital_mortality", "icu_transfer_12h", "critical", "ed_revisit_3d"];
        for e in &self.evaluations {
            if !TASKS.contains(&e.task.as_str()) {
                return Err(Error::Config(format!("unknown task `{}`; expected one of {TASKS:?}", e.task)));
            }
        }
        if let Some(s) = &self.stratify_on {
            if !TASKS.contains(&s.trim_start_matches("outcome_")) {
                return Err(Error::Config(format!("cannot stratify on unknown outcome `{s}`")));
            }
        }
        self.synth.validate()
    }

    /// Load every configured table, checking that referenced paths exist.
    pub fn load_resources(&self) -> Result<Resources> {
        let opt = |p: &Option<PathBuf>, what: &str| -> Result<()> {
            match p {
                Some(p) => check_exists(p, what),
                None => Ok(()),
            }
        };
        opt(&self.cleaning, "cleaning config")?;
        opt(&self.chief_complaints, "chief-complaint table")?;
        opt(&self.comorbidity.charlson, "Charlson table")?;
        opt(&self.comorbidity.elixhauser, "Elixhauser table")?;
        opt(&self.manifests.triage, "triage manifest")?;
        opt(&self.manifests.disposition, "disposition manifest")?;
        for p in &self.scores {
            check_exists(p, "score definition")?;
        }

        let comorbidity = ComorbidityTables {
            charlson: match &self.comorbidity.charlson {
                Some(p) => IcdMappingTable::from_path(p)?,
                None => IcdMappingTable::charlson(),
            },
            elixhauser: match &self.comorbidity.elixhauser {
                Some(p) => IcdMappingTable::from_path(p)?,
                None => IcdMappingTable::elixhauser(),
            },
        };
        let complaints = match &self.chief_complaints {
            Some(p) => ComplaintMatcher::from_path(p)?,
            None => ComplaintMatcher::default(),
        };
        let cleaning = match &self.cleaning {
            Some(p) => CleaningConfig::from_path(p)?,
            None => CleaningConfig::default(),
        };
        let scores = if self.scores.is_empty() {
            ScoreDefinition::defaults()
        } else {
            self.scores.iter().map(|p| ScoreDefinition::from_path(p)).collect::<Result<_>>()?
        };
        for s in &scores {
            s.check_coverage(&cleaning)?;
        }
        let manifest = |p: &Option<PathBuf>, tp| match p {
            Some(p) => Manifest::from_path(p),
            None => Ok(Manifest::default_for(tp)),
        };
        Ok(Resources {
            cohort: CohortOptions {
                lookback: LookbackOptions {
                    years: self.lookback_years,
                    include_index_admission: self.include_index_admission,
                },
                comorbidity,
                complaints,
            },
            cleaning,
            scores,
            triage_manifest: manifest(&self.manifests.triage, TimePoint::Triage)?,
            disposition_manifest: manifest(&self.manifests.disposition, TimePoint::Disposition)?,
        })
    }
}
