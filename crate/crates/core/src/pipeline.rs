//! End-to-end stages over a fixed output layout.
//!
//! ```text
//! <output_dir>/master_dataset.csv
//! <output_dir>/benchmark/{train,test,split,exclusions}.csv, imputer.json
//! <output_dir>/models/<time_point>/<task>/<MODEL>.json (+ .runtime.json)
//! <output_dir>/report/report.{csv,json}, figure_{auroc,auprc}.svg,
//!                     cohort_summary.csv, rf_importance_<task>@<time_point>.csv
//! <output_dir>/run_manifest_<command>.json
//! ```
//!
//! Every stage reads its inputs in full before writing anything.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::clean_split::{apply_exclusions, clean_frame, fit_imputer, split, Imputer, Part, SplitAssignment};
use crate::cohort::{build_master, write_master_path, OUTCOMES};
use crate::config::{Evaluation, PipelineConfig, Resources, Timing};
use crate::dataset::Frame;
use crate::error::{Error, Result};
use crate::evaluate::{evaluate_scores, summarize_cohort, EvalReport, RowSpec};
use crate::ingest::{link_tables, read_raw_tables, ParseOptions};
use crate::models::{self, FeatureMatrix, ModelKind, TimePoint, TrainedModel};
use crate::rng::derive_seed;
use crate::scores::{esi_frame, VitalsSource};
use crate::synth::{generate_cohort, write_cohort};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: String,
    pub rows: BTreeMap<String, usize>,
    pub issues: BTreeMap<String, usize>,
}

impl StageSummary {
    fn new(stage: &str) -> Self {
        StageSummary { stage: stage.into(), ..Default::default() }
    }

    fn rows(&mut self, key: impl Into<String>, n: usize) -> &mut Self {
        self.rows.insert(key.into(), n);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub stages: Vec<StageSummary>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &PipelineConfig, threads: usize) -> Self {
        RunManifest {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            threads,
            stages: Vec::new(),
        }
    }

    pub fn write(&self, output_dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
        let path = output_dir.join(format!("run_manifest_{}.json", self.command));
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// File locations under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Layout { root: root.to_path_buf() }
    }
    pub fn master(&self) -> PathBuf {
        self.root.join("master_dataset.csv")
    }
    pub fn benchmark(&self) -> PathBuf {
        self.root.join("benchmark")
    }
    pub fn train(&self) -> PathBuf {
        self.benchmark().join("train.csv")
    }
    pub fn test(&self) -> PathBuf {
        self.benchmark().join("test.csv")
    }
    pub fn split(&self) -> PathBuf {
        self.benchmark().join("split.csv")
    }
    pub fn imputer(&self) -> PathBuf {
        self.benchmark().join("imputer.json")
    }
    pub fn exclusions(&self) -> PathBuf {
        self.benchmark().join("exclusions.csv")
    }
    pub fn model(&self, tp: TimePoint, task: &str, kind: ModelKind) -> PathBuf {
        self.root.join("models").join(tp.as_str()).join(task).join(format!("{kind}.json"))
    }
    pub fn runtime(&self, tp: TimePoint, task: &str, kind: ModelKind) -> PathBuf {
        self.model(tp, task, kind).with_extension("runtime.json")
    }
    pub fn report(&self) -> PathBuf {
        self.root.join("report")
    }
}

fn mkdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Which evaluations and models a command touches.
#[derive(Debug, Clone, Default)]
pub struct Selection {
    pub time_point: Option<TimePoint>,
    pub task: Option<String>,
    pub model: Option<ModelKind>,
}

impl Selection {
    pub fn evaluations<'a>(&self, cfg: &'a PipelineConfig) -> Result<Vec<&'a Evaluation>> {
        let picked: Vec<&Evaluation> = cfg
            .evaluations
            .iter()
            .filter(|e| self.time_point.map_or(true, |tp| tp == e.time_point))
            .filter(|e| self.task.as_deref().map_or(true, |t| t == e.task))
            .collect();
        if picked.is_empty() {
            return Err(Error::Config("no configured evaluation matches the selected task and time point".into()));
        }
        Ok(picked)
    }

    pub fn models(&self, cfg: &PipelineConfig) -> Vec<ModelKind> {
        cfg.model_kinds.iter().copied().filter(|k| self.model.map_or(true, |m| m == *k)).collect()
    }
}

/// Generate synthetic raw tables into `input_dir`.
pub fn run_synth(cfg: &PipelineConfig) -> Result<StageSummary> {
    let out = generate_cohort(&cfg.synth)?;
    write_cohort(&cfg.input_dir, &out)?;
    let t = &out.tables;
    let mut s = StageSummary::new("synth");
    s.rows("edstays", t.edstays.len())
        .rows("patients", t.patients.len())
        .rows("admissions", t.admissions.len())
        .rows("icustays", t.icustays.len())
        .rows("diagnoses", t.diagnoses.len());
    Ok(s)
}

/// Raw tables to `master_dataset.csv`.
pub fn extract_master(cfg: &PipelineConfig, res: &Resources) -> Result<StageSummary> {
    let opts = ParseOptions { temperature_unit: cfg.temperature_unit };
    let (tables, mut issues) = read_raw_tables(&cfg.input_dir, &opts)?;
    let linked = link_tables(&tables, &mut issues)?;
    let records = build_master(&linked, &res.cohort, &mut issues)?;
    let layout = Layout::new(&cfg.output_dir);
    mkdir(&layout.root)?;
    write_master_path(&layout.master(), &records, &res.cohort.schema())?;

    let mut s = StageSummary::new("extract-master");
    s.rows("edstays", tables.edstays.len())
        .rows("patients", tables.patients.len())
        .rows("linked_stays", linked.len())
        .rows("dropped_stays", linked.report.dropped_stays())
        .rows("orphan_rows", linked.report.orphan_count())
        .rows("master_rows", records.len());
    let subjects: std::collections::BTreeSet<i64> = records.iter().map(|r| r.subject_id).collect();
    s.rows("master_subjects", subjects.len());
    s.issues = issues.counts();
    Ok(s)
}

fn feature_columns(frame: &Frame) -> Vec<String> {
    frame.names().iter().filter(|n| !OUTCOMES.contains(&n.as_str())).cloned().collect()
}

/// Exclusions, cleaning, split and imputation.
pub fn build_benchmark(cfg: &PipelineConfig, res: &Resources) -> Result<StageSummary> {
    let layout = Layout::new(&cfg.output_dir);
    let master = Frame::read_csv_path(&layout.master())?;
    let (mut cohort, excluded) = apply_exclusions(&master)?;
    let cleaning = clean_frame(&mut cohort, &res.cleaning);

    let strata: Option<Vec<bool>> = match &cfg.stratify_on {
        Some(o) => {
            let col = format!("outcome_{}", o.trim_start_matches("outcome_"));
            Some(cohort.require(&col)?.iter().map(|&v| v == 1.0).collect())
        }
        None => None,
    };
    let assignment = split(&cohort.stay_id, cfg.test_fraction, cfg.seed, strata.as_deref())?;
    let part_of = |r: usize| assignment.part(cohort.stay_id[r]);
    let mut train = cohort.filter_rows(|r| part_of(r) == Some(Part::Train));
    let mut test = cohort.filter_rows(|r| part_of(r) == Some(Part::Test));

    let columns = feature_columns(&train);
    let imputer = fit_imputer(&train, &columns, cfg.imputation)?;
    let filled_train = imputer.apply(&mut train)?;
    let filled_test = imputer.apply(&mut test)?;
    for (name, f) in [("train", &train), ("test", &test)] {
        let left = f.count_missing(f.names())?;
        if left > 0 {
            return Err(Error::Integrity(format!("{left} missing cells remain in the {name} split after imputation")));
        }
    }

    mkdir(&layout.benchmark())?;
    train.write_csv_path(&layout.train())?;
    test.write_csv_path(&layout.test())?;
    assignment.write(&layout.split())?;
    imputer.save(&layout.imputer())?;
    let mut w = csv::Writer::from_path(layout.exclusions())
        .map_err(|e| Error::Csv { path: layout.exclusions().display().to_string(), source: e })?;
    for e in &excluded {
        w.serialize(e).map_err(|e| Error::Csv { path: "exclusions.csv".into(), source: e })?;
    }
    w.flush().map_err(|e| Error::io(layout.exclusions(), e))?;

    let mut s = StageSummary::new("build-benchmark");
    s.rows("master_rows", master.n_rows())
        .rows("excluded", excluded.len())
        .rows("cohort_rows", cohort.n_rows())
        .rows("train_rows", train.n_rows())
        .rows("test_rows", test.n_rows())
        .rows("imputed_cells_train", filled_train)
        .rows("imputed_cells_test", filled_test);
    for (col, (removed, clamped)) in cleaning.per_column {
        if removed > 0 {
            s.issues.insert(format!("clean/removed/{col}"), removed);
        }
        if clamped > 0 {
            s.issues.insert(format!("clean/clamped/{col}"), clamped);
        }
    }
    Ok(s)
}

fn model_seed(cfg: &PipelineConfig, e: &Evaluation, kind: ModelKind) -> u64 {
    derive_seed(cfg.seed, &format!("model/{}/{kind}", e.key()), 0)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct Runtime {
    train_seconds: f64,
}

/// Fit the selected models on the training split.
pub fn train_models(cfg: &PipelineConfig, res: &Resources, sel: &Selection) -> Result<StageSummary> {
    let layout = Layout::new(&cfg.output_dir);
    let train = Frame::read_csv_path(&layout.train())?;
    let mut s = StageSummary::new("train");
    s.rows("train_rows", train.n_rows());
    let mut n = 0;
    for e in sel.evaluations(cfg)? {
        let x = FeatureMatrix::from_frame(&train, res.manifest(e.time_point), &e.outcome_column())?;
        for kind in sel.models(cfg) {
            log::info!("training {kind} for {}", e.key());
            let model = models::train(kind, &x, &cfg.models, model_seed(cfg, e, kind))?;
            let path = layout.model(e.time_point, &e.task, kind);
            mkdir(path.parent().expect("model path has a parent"))?;
            model.save(&path)?;
            let rt = serde_json::to_string(&Runtime { train_seconds: model.train_seconds }).expect("serializes");
            let rt_path = layout.runtime(e.time_point, &e.task, kind);
            std::fs::write(&rt_path, rt).map_err(|err| Error::io(&rt_path, err))?;
            n += 1;
        }
    }
    s.rows("models_trained", n);
    Ok(s)
}

fn read_runtime(path: &Path) -> Option<f64> {
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str::<Runtime>(&text).ok().map(|r| r.train_seconds)
}

/// Test-set metrics for models and clinical scores; writes the report,
/// figures, cohort summary and forest importances.
pub fn evaluate(cfg: &PipelineConfig, res: &Resources, sel: &Selection) -> Result<(EvalReport, StageSummary)> {
    let layout = Layout::new(&cfg.output_dir);
    let test = Frame::read_csv_path(&layout.test())?;
    let mut report = EvalReport::default();
    let mut importances: Vec<(String, Vec<(String, f64)>)> = Vec::new();

    for e in sel.evaluations(cfg)? {
        let manifest = res.manifest(e.time_point);
        let x = FeatureMatrix::from_frame(&test, manifest, &e.outcome_column())?;
        let labels = &x.labels;
        let boot_seed = derive_seed(cfg.seed, &format!("bootstrap/{}", e.key()), 0);
        let tp = e.time_point.as_str();
        for kind in sel.models(cfg) {
            let model = TrainedModel::load(&layout.model(e.time_point, &e.task, kind))?;
            let p = model.predict_proba(&x)?;
            let runtime = match cfg.timing {
                Timing::Wall => read_runtime(&layout.runtime(e.time_point, &e.task, kind)),
                Timing::None => None,
            };
            let spec = RowSpec { task: &e.task, time_point: tp, model: kind.as_str(), n_variables: x.n_cols(), runtime_seconds: runtime };
            report.rows.push(evaluate_scores(&spec, &p, labels, cfg.bootstrap, boot_seed)?);
            if kind == ModelKind::Rf {
                importances.push((e.key(), model.rf_variable_importance()?));
            }
        }
        if e.scores && sel.model.is_none() {
            let source = match e.time_point {
                TimePoint::Triage => VitalsSource::Triage,
                TimePoint::Disposition => VitalsSource::Ed,
            };
            let start = Instant::now();
            let esi = esi_frame(&test)?;
            let took = start.elapsed().as_secs_f64();
            let mut scored = vec![("ESI".to_string(), 1, esi, took)];
            for def in &res.scores {
                let start = Instant::now();
                let v = def.score_frame(&test, source)?;
                scored.push((def.name.clone(), def.variable_count(), v, start.elapsed().as_secs_f64()));
            }
            for (name, n_vars, values, took) in scored {
                let spec = RowSpec {
                    task: &e.task,
                    time_point: tp,
                    model: &name,
                    n_variables: n_vars,
                    runtime_seconds: (cfg.timing == Timing::Wall).then_some(took),
                };
                report.rows.push(evaluate_scores(&spec, &values, labels, cfg.bootstrap, boot_seed)?);
            }
        }
    }

    let dir = layout.report();
    mkdir(&dir)?;
    report.write_all(&dir)?;
    for (key, imp) in &importances {
        let mut text = String::from("rank,variable,importance\n");
        for (i, (name, v)) in imp.iter().enumerate() {
            text.push_str(&format!("{},{name},{v:.6}\n", i + 1));
        }
        let path = dir.join(format!("rf_importance_{key}.csv"));
        std::fs::write(&path, text).map_err(|err| Error::io(&path, err))?;
    }
    let master = Frame::read_csv_path(&layout.master())?;
    let (cohort, _) = apply_exclusions(&master)?;
    let summary = summarize_cohort(
        &cohort,
        &feature_columns(&cohort),
        &["outcome_hospitalization", "outcome_critical", "outcome_ed_revisit_3d"],
    )?;
    summary.write_csv_path(&dir.join("cohort_summary.csv"))?;

    let mut s = StageSummary::new("evaluate");
    s.rows("test_rows", test.n_rows()).rows("report_rows", report.rows.len());
    Ok((report, s))
}

/// Score the rows of a frame CSV with a saved model; writes
/// `stay_id,probability`.
pub fn predict(model_path: &Path, input: &Path, output: &Path) -> Result<usize> {
    let model = TrainedModel::load(model_path)?;
    let frame = Frame::read_csv_path(input)?;
    let data = frame.matrix(&model.manifest)?;
    let x = FeatureMatrix::new(model.manifest.clone(), data, vec![false; frame.n_rows()])?;
    let p = model.predict_proba(&x)?;
    let mut text = String::from("stay_id,probability\n");
    for (id, v) in frame.stay_id.iter().zip(&p) {
        text.push_str(&format!("{id},{v}\n"));
    }
    std::fs::write(output, text).map_err(|e| Error::io(output, e))?;
    Ok(p.len())
}

/// Every stage in order: synthetic data (when `with_synth`), master,
/// benchmark, training, evaluation.
pub fn run_all(cfg: &PipelineConfig, res: &Resources, with_synth: bool) -> Result<Vec<StageSummary>> {
    let sel = Selection::default();
    let mut stages = Vec::new();
    if with_synth {
        stages.push(run_synth(cfg)?);
    }
    stages.push(extract_master(cfg, res)?);
    stages.push(build_benchmark(cfg, res)?);
    stages.push(train_models(cfg, res, &sel)?);
    stages.push(evaluate(cfg, res, &sel)?.1);
    Ok(stages)
}

/// Reload a split file and the imputer, e.g. for audits.
pub fn load_benchmark_artifacts(layout: &Layout) -> Result<(SplitAssignment, Imputer)> {
    Ok((SplitAssignment::read(&layout.split())?, Imputer::load(&layout.imputer())?))
}

