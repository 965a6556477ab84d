//! Checks behind the acceptance run. Each returns a verdict with a short
//! detail line instead of panicking, so one failure does not hide the rest.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use edbench::clean_split::{clean_value, split, CleaningConfig, Part, SplitAssignment};
use edbench::cohort::{build_master, CohortOptions, OUTCOMES};
use edbench::comorbidity::LookbackOptions;
use edbench::config::{Evaluation, PipelineConfig, Resources, Timing};
use edbench::dataset::Frame;
use edbench::evaluate::{auprc, auroc, EvalReport};
use edbench::ingest::{link_tables, DiagnosisRecord, RawTables};
use edbench::models::gb::train_gb;
use edbench::models::lr::lr_objective;
use edbench::models::mlp::{mlp_loss_and_grad, n_params};
use edbench::models::{FeatureMatrix, GbConfig, ModelKind, TimePoint};
use edbench::pipeline::{self, Layout, Selection, StageSummary};
use edbench::rng::rng_from;
use edbench::synth::{generate_cohort, read_ground_truth, SynthConfig, GROUND_TRUTH_FILE};
use edbench::IssueLog;

use super::charts::score_mismatches;
use super::oracles::{binomial_interval, brute_auprc, brute_auroc, numeric_gradient, relative_error};

pub enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass(_) => "PASS",
            Verdict::Fail(_) => "FAIL",
            Verdict::Skip(_) => "SKIP",
        }
    }

    pub fn detail(&self) -> &str {
        match self {
            Verdict::Pass(d) | Verdict::Fail(d) | Verdict::Skip(d) => d,
        }
    }

    fn check(ok: bool, detail: String) -> Self {
        if ok {
            Verdict::Pass(detail)
        } else {
            Verdict::Fail(detail)
        }
    }
}

fn err(e: impl std::fmt::Display) -> Verdict {
    Verdict::Fail(format!("error: {e}"))
}

macro_rules! tryv {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return err(e),
        }
    };
}

/// A score/label fixture with both classes present. Every other fixture
/// draws scores from a handful of integers to force ties.
pub fn metric_fixture(i: u64) -> (Vec<f64>, Vec<bool>) {
    let mut rng = rng_from(5, "metric-fixture", i);
    let n = rng.random_range(2..=200);
    let p = rng.random_range(0.05..0.95);
    let tied = i % 2 == 0;
    let levels = rng.random_range(2..=8);
    let scores: Vec<f64> = (0..n)
        .map(|_| if tied { rng.random_range(0..levels) as f64 } else { rng.random::<f64>() })
        .collect();
    let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(p)).collect();
    labels[0] = true;
    labels[1] = false;
    (scores, labels)
}

pub fn metric_oracles(n_fixtures: u64) -> Verdict {
    let mut worst = 0.0f64;
    let mut auprc_mismatch = 0;
    for i in 0..n_fixtures {
        let (s, l) = metric_fixture(i);
        let a = tryv!(auroc(&s, &l));
        worst = worst.max((a - brute_auroc(&s, &l)).abs());
        if tryv!(auprc(&s, &l)) != brute_auprc(&s, &l) {
            auprc_mismatch += 1;
        }
    }
    Verdict::check(
        worst <= 1e-12 && auprc_mismatch == 0,
        format!("{n_fixtures} fixtures; max |auroc - oracle| = {worst:.1e}; auprc mismatches = {auprc_mismatch}"),
    )
}

fn normal_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    }).collect()
}

pub fn gradient_checks(points: u64) -> Verdict {
    let (mut worst_lr, mut worst_mlp) = (0.0f64, 0.0f64);
    for i in 0..points {
        let mut rng = rng_from(6, "gradient", i);
        let (n, d, hidden) = (40, 5, 8);
        let x = normal_vec(&mut rng, n * d, 1.0);
        let y: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.random_bool(0.4)))).collect();

        let w = normal_vec(&mut rng, d + 1, 1.0);
        let (_, g) = lr_objective(&w, &x, &y, d, 0.7);
        let fd = numeric_gradient(|p| lr_objective(p, &x, &y, d, 0.7).0, &w, 1e-5);
        worst_lr = worst_lr.max(relative_error(&g, &fd));

        let p = normal_vec(&mut rng, n_params(d, hidden), 0.5);
        let (_, g) = mlp_loss_and_grad(&p, &x, &y, d, hidden, 1e-2);
        let fd = numeric_gradient(|q| mlp_loss_and_grad(q, &x, &y, d, hidden, 1e-2).0, &p, 1e-6);
        worst_mlp = worst_mlp.max(relative_error(&g, &fd));
    }
    Verdict::check(
        worst_lr < 1e-4 && worst_mlp < 1e-3,
        format!("{points} points; worst relative error LR {worst_lr:.1e}, MLP {worst_mlp:.1e}"),
    )
}

/// Noisy labels from a nonlinear rule on `d` Gaussian features.
pub fn classification_fixture(seed: u64, n: usize, d: usize) -> FeatureMatrix {
    let mut rng = rng_from(seed, "class-fixture", 0);
    let data = normal_vec(&mut rng, n * d, 1.0);
    let labels = data
        .chunks(d)
        .map(|r| {
            let z = 1.5 * r[0] - r[1] * r[1] + 0.5 * r[0] * r[d - 1];
            rng.random::<f64>() < 1.0 / (1.0 + (-z).exp())
        })
        .collect();
    let names = (0..d).map(|j| format!("f{j}")).collect();
    FeatureMatrix::new(names, data, labels).expect("finite fixture")
}

pub fn gb_monotone(fixtures: u64) -> Verdict {
    let cfg = GbConfig::default();
    let mut increases = 0;
    for f in 0..fixtures {
        let x = classification_fixture(700 + f, 400, 6);
        let model = tryv!(train_gb(&x, &cfg));
        if model.deviance.len() != cfg.n_stages + 1 {
            return Verdict::Fail(format!("deviance trace has {} entries", model.deviance.len()));
        }
        increases += model.deviance.windows(2).filter(|w| w[1] > w[0]).count();
    }
    Verdict::check(increases == 0, format!("{fixtures} fixtures x {} stages; increases = {increases}", cfg.n_stages))
}

pub fn score_tables() -> Verdict {
    let (mismatches, checked) = score_mismatches();
    Verdict::check(
        mismatches.is_empty() && checked > 5_000,
        format!("{checked} grid points; mismatches = {}", mismatches.len()),
    )
}

/// One synthetic cohort pushed through the whole pipeline, shared by the
/// round-trip, learnability and missingness checks.
pub struct SynthRun {
    pub _dir: tempfile::TempDir,
    pub cfg: PipelineConfig,
    pub res: Resources,
    pub stages: Vec<StageSummary>,
    pub report: EvalReport,
}

pub fn pipeline_config(root: &Path, n_visits: usize) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        input_dir: root.join("raw"),
        output_dir: root.join("out"),
        timing: Timing::None,
        ..PipelineConfig::default()
    };
    cfg.synth.n_visits = Some(n_visits);
    cfg
}

pub fn synth_run(n_visits: usize) -> Result<SynthRun, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = pipeline_config(dir.path(), n_visits);
    let res = cfg.load_resources().map_err(|e| e.to_string())?;
    let stages = pipeline::run_all(&cfg, &res, true).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(Layout::new(&cfg.output_dir).report().join("report.json"))
        .map_err(|e| e.to_string())?;
    let report = EvalReport::from_json(&text).map_err(|e| e.to_string())?;
    Ok(SynthRun { _dir: dir, cfg, res, stages, report })
}

pub fn round_trip(run: &SynthRun) -> Verdict {
    let truth = tryv!(read_ground_truth(&run.cfg.input_dir.join(GROUND_TRUTH_FILE)));
    let master = tryv!(Frame::read_csv_path(&Layout::new(&run.cfg.output_dir).master()));
    let cols: Vec<&[f64]> = OUTCOMES.iter().map(|o| master.require(o).expect("outcome column")).collect();
    let mut disagreements = 0;
    for (r, id) in master.stay_id.iter().enumerate() {
        match truth.get(id) {
            Some(t) => disagreements += (0..5).filter(|&k| (cols[k][r] == 1.0) != t[k]).count(),
            None => disagreements += 1,
        }
    }
    if master.n_rows() != truth.len() {
        return Verdict::Fail(format!("master has {} rows, ground truth {}", master.n_rows(), truth.len()));
    }
    let n = master.n_rows() as u64;
    let targets = [
        ("hospitalization", 0, run.cfg.synth.prevalence_hospitalization),
        ("critical", 3, run.cfg.synth.prevalence_critical),
        ("reattendance", 4, run.cfg.synth.prevalence_reattendance),
    ];
    let mut ok = disagreements == 0;
    let mut parts = vec![format!("{n} visits; label disagreements = {disagreements}")];
    for (name, k, p) in targets {
        let count = cols[k].iter().filter(|&&v| v == 1.0).count() as u64;
        let (lo, hi) = binomial_interval(n, p, 0.99);
        ok &= (lo..=hi).contains(&count);
        parts.push(format!("{name} {count} in [{lo}, {hi}]"));
    }
    Verdict::check(ok, parts.join("; "))
}

fn is_score(row_model: &str) -> bool {
    ModelKind::parse(row_model).is_none()
}

pub fn learnability(run: &SynthRun) -> Verdict {
    let get = |model: &str| {
        run.report
            .rows
            .iter()
            .find(|r| r.task == "hospitalization" && r.time_point == "triage" && r.model == model)
            .map(|r| r.auroc.value)
    };
    let (Some(gb), Some(rf), Some(lr)) = (get("GB"), get("RF"), get("LR")) else {
        return Verdict::Fail("report lacks hospitalization model rows".into());
    };
    let scores: Vec<(String, f64)> = run
        .report
        .rows
        .iter()
        .filter(|r| is_score(&r.model))
        .map(|r| (format!("{}@{}/{}", r.task, r.time_point, r.model), r.auroc.value))
        .collect();
    let weakest = scores.iter().min_by(|a, b| a.1.total_cmp(&b.1));
    let scores_ok = !scores.is_empty() && scores.iter().all(|(_, a)| *a > 0.5);
    let ok = gb > 0.7 && rf > 0.7 && (lr - gb).abs() <= 0.1 && scores_ok;
    let weakest = weakest.map_or("none".to_string(), |(n, a)| format!("{n} {a:.3}"));
    Verdict::check(
        ok,
        format!("GB {gb:.3}, RF {rf:.3}, LR {lr:.3}; {} score rows, weakest {weakest}", scores.len()),
    )
}

/// Drawn over the outer range widened by half its span on each side, plus
/// the four bounds themselves and missing values.
pub fn cleaning_invariants(values_per_variable: usize) -> Verdict {
    let cfg = CleaningConfig::default();
    let mut violations = Vec::new();
    for name in cfg.variables.keys() {
        let b = cfg.bounds(name).expect("valid bounds");
        let span = b.outer_high - b.outer_low;
        let mut rng = rng_from(12, name, 0);
        let mut vals: Vec<f64> = (0..values_per_variable)
            .map(|_| {
                if rng.random_bool(0.01) {
                    f64::NAN
                } else {
                    rng.random_range(b.outer_low - span / 2.0..b.outer_high + span / 2.0)
                }
            })
            .collect();
        vals.extend([b.outer_low, b.outer_high, b.inner_low, b.inner_high]);
        let cleaned: Vec<f64> = vals.iter().map(|&v| clean_value(v, b)).collect();
        let not_idempotent = cleaned.iter().filter(|&&c| clean_value(c, b).to_bits() != c.to_bits() && !c.is_nan()).count();
        let mut pairs: Vec<(f64, f64)> = vals.iter().copied().zip(cleaned).filter(|(v, _)| !v.is_nan()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let kept: Vec<f64> = pairs.iter().map(|p| p.1).filter(|c| !c.is_nan()).collect();
        let not_monotone = kept.windows(2).filter(|w| w[1] < w[0]).count();
        let out_of_inner = kept.iter().filter(|&&c| c < b.inner_low || c > b.inner_high).count();
        if not_idempotent + not_monotone + out_of_inner > 0 {
            violations.push(format!("{name}: {not_idempotent}/{not_monotone}/{out_of_inner}"));
        }
    }
    Verdict::check(
        violations.is_empty(),
        format!("{} variables x {values_per_variable} values; violations {violations:?}", cfg.variables.len()),
    )
}

pub fn no_missing_after_pipeline(run: &SynthRun) -> Verdict {
    let layout = Layout::new(&run.cfg.output_dir);
    let mut total = 0;
    let mut raw_missing = 0;
    for path in [layout.train(), layout.test()] {
        let f = tryv!(Frame::read_csv_path(&path));
        total += tryv!(f.count_missing(f.names()));
        for tp in [TimePoint::Triage, TimePoint::Disposition] {
            tryv!(FeatureMatrix::from_frame(&f, run.res.manifest(tp), "outcome_hospitalization"));
        }
    }
    let master = tryv!(Frame::read_csv_path(&layout.master()));
    raw_missing += tryv!(master.count_missing(master.names()));
    let invariants = cleaning_invariants(100_000);
    let ok = total == 0 && raw_missing > 0 && matches!(invariants, Verdict::Pass(_));
    Verdict::check(
        ok,
        format!("missing cells: master {raw_missing}, train+test {total}; clean_value: {}", invariants.detail()),
    )
}

/// Charlson and Elixhauser fields per stay.
type ComorbidityView = BTreeMap<i64, (Vec<u8>, Vec<u8>)>;

fn comorbidity_view(tables: &RawTables, include_index: bool) -> Result<ComorbidityView, String> {
    let mut issues = IssueLog::new();
    let linked = link_tables(tables, &mut issues).map_err(|e| e.to_string())?;
    let opts = CohortOptions {
        lookback: LookbackOptions { years: 5, include_index_admission: include_index },
        ..CohortOptions::default()
    };
    let records = build_master(&linked, &opts, &mut issues).map_err(|e| e.to_string())?;
    Ok(records.into_iter().map(|r| (r.stay_id, (r.cci, r.eci))).collect())
}

/// Codes that hit many Charlson and Elixhauser categories at once.
const LOUD_CODES: [(&str, u8); 6] =
    [("C78.0", 10), ("I50.9", 10), ("E11.2", 10), ("N18.6", 10), ("B20", 10), ("F10.20", 10)];

/// Replace the diagnoses of every subject's last index admission (no later
/// visit can see them through its look-back) with `LOUD_CODES`.
pub fn mutate_index_admissions(tables: &RawTables) -> (RawTables, usize) {
    let mut last: BTreeMap<i64, (chrono::NaiveDateTime, Option<i64>)> = BTreeMap::new();
    for s in &tables.edstays {
        let e = last.entry(s.subject_id).or_insert((s.intime, s.hadm_id));
        if s.intime >= e.0 {
            *e = (s.intime, s.hadm_id);
        }
    }
    let targets: BTreeSet<(i64, i64)> = last.iter().filter_map(|(&sub, &(_, h))| h.map(|h| (sub, h))).collect();
    let mut out = tables.clone();
    out.diagnoses.retain(|d| !targets.contains(&(d.subject_id, d.hadm_id)));
    for &(subject_id, hadm_id) in &targets {
        for (k, (code, v)) in LOUD_CODES.iter().enumerate() {
            out.diagnoses.push(DiagnosisRecord {
                subject_id,
                hadm_id,
                seq_num: k as i32 + 1,
                icd_code: code.to_string(),
                icd_version: *v,
            });
        }
    }
    (out, targets.len())
}

pub fn leakage_guard() -> Verdict {
    let cfg = SynthConfig { n_patients: 600, ..SynthConfig::default() };
    let tables = tryv!(generate_cohort(&cfg)).tables;
    let (mutated, n_adm) = mutate_index_admissions(&tables);
    let before = tryv!(comorbidity_view(&tables, false));
    let after = tryv!(comorbidity_view(&mutated, false));
    let changed = before.iter().filter(|(id, v)| after.get(id) != Some(v)).count();
    let with_history = before.values().filter(|(c, e)| c.iter().chain(e).any(|&x| x > 0)).count();
    // The same mutation must be visible once index codes are allowed in,
    // or the check above proves nothing.
    let leaky = tryv!(comorbidity_view(&mutated, true));
    let visible = after.iter().filter(|(id, v)| leaky.get(id) != Some(v)).count();
    Verdict::check(
        changed == 0 && n_adm > 0 && visible > 0 && with_history > 0,
        format!(
            "{n_adm} index admissions mutated; rows changed = {changed}; \
             rows with prior comorbidity = {with_history}; rows changed when index codes included = {visible}"
        ),
    )
}

fn rewrite_master(path: &Path, edit: impl Fn(&csv::StringRecord, &csv::StringRecord) -> Option<csv::StringRecord>, shuffle: Option<u64>) -> Result<(), String> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let header = rdr.headers().map_err(|e| e.to_string())?.clone();
    let mut rows: Vec<csv::StringRecord> = rdr.records().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    for row in rows.iter_mut() {
        if let Some(new) = edit(&header, row) {
            *row = new;
        }
    }
    if let Some(seed) = shuffle {
        rows.shuffle(&mut rng_from(seed, "shuffle-master", 0));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| e.to_string())?;
    w.write_record(&header).map_err(|e| e.to_string())?;
    for r in &rows {
        w.write_record(r).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_default()
}

pub fn split_integrity() -> Verdict {
    let dir = tryv!(tempfile::tempdir());
    let cfg = pipeline_config(dir.path(), 3_000);
    let res = tryv!(cfg.load_resources());
    tryv!(pipeline::run_synth(&cfg));
    tryv!(pipeline::extract_master(&cfg, &res));
    let summary = tryv!(pipeline::build_benchmark(&cfg, &res));
    let layout = Layout::new(&cfg.output_dir);
    let (split_bytes, imputer_bytes, test_bytes) = (read(&layout.split()), read(&layout.imputer()), read(&layout.test()));

    let (cohort, train, test) = (summary.rows["cohort_rows"], summary.rows["train_rows"], summary.rows["test_rows"]);
    let expected_test = (cfg.test_fraction * cohort as f64).round() as usize;
    let sizes_ok = test == expected_test && train + test == cohort;

    // Library level: any permutation of the ids gives the same assignment.
    let assignment = tryv!(SplitAssignment::read(&layout.split()));
    let mut ids: Vec<i64> = assignment.assignment.keys().copied().collect();
    let mut order_ok = true;
    for k in 0..5 {
        ids.shuffle(&mut rng_from(14, "permute-ids", k));
        order_ok &= tryv!(split(&ids, cfg.test_fraction, cfg.seed, None)) == assignment;
    }

    // Pipeline level: shuffled master rows give identical artifacts.
    let master = layout.master();
    let pristine = read(&master);
    tryv!(rewrite_master(&master, |_, _| None, Some(3)));
    tryv!(pipeline::build_benchmark(&cfg, &res));
    order_ok &= read(&layout.split()) == split_bytes && read(&layout.imputer()) == imputer_bytes;

    // Mutation: flip every feature cell of test rows between missing and
    // present. The imputer must not notice.
    tryv!(std::fs::write(&master, &pristine));
    let test_ids: BTreeSet<String> =
        assignment.assignment.iter().filter(|(_, &p)| p == Part::Test).map(|(id, _)| id.to_string()).collect();
    let protected = ["subject_id", "stay_id", "hadm_id", "intime", "outtime", "age", "triage_acuity"];
    tryv!(rewrite_master(
        &master,
        |header, row| {
            let sid = header.iter().position(|h| h == "stay_id")?;
            if !test_ids.contains(&row[sid]) {
                return None;
            }
            let cells = header.iter().zip(row.iter()).map(|(h, v)| {
                if protected.contains(&h) || h.starts_with("outcome_") {
                    v.to_string()
                } else if v.is_empty() {
                    "1".to_string()
                } else {
                    String::new()
                }
            });
            Some(csv::StringRecord::from(cells.collect::<Vec<_>>()))
        },
        None,
    ));
    tryv!(pipeline::build_benchmark(&cfg, &res));
    let imputer_same = read(&layout.imputer()) == imputer_bytes && read(&layout.split()) == split_bytes;
    let test_changed = read(&layout.test()) != test_bytes;

    Verdict::check(
        sizes_ok && order_ok && imputer_same && test_changed,
        format!(
            "cohort {cohort}: train {train}, test {test} (expected {expected_test}); order invariant = {order_ok}; \
             imputer unchanged under test-row mutation = {imputer_same} (test split changed = {test_changed})"
        ),
    )
}

/// Every output file except wall-clock sidecars and run manifests.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        let Ok(entries) = std::fs::read_dir(dir) else { return };
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
                if !name.ends_with(".runtime.json") && !name.starts_with("run_manifest") {
                    out.insert(p.strip_prefix(base).expect("under base").to_path_buf(), read(&p));
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool").install(f)
}

fn diff(a: &BTreeMap<PathBuf, Vec<u8>>, b: &BTreeMap<PathBuf, Vec<u8>>) -> Vec<String> {
    let keys: BTreeSet<&PathBuf> = a.keys().chain(b.keys()).collect();
    keys.into_iter().filter(|k| a.get(*k) != b.get(*k)).map(|k| k.display().to_string()).collect()
}

pub fn determinism() -> Verdict {
    let dir = tryv!(tempfile::tempdir());
    let cfg = pipeline_config(dir.path(), 3_000);
    let res = tryv!(cfg.load_resources());
    let run = |threads: usize| -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
        let _ = std::fs::remove_dir_all(dir.path().join("raw"));
        let _ = std::fs::remove_dir_all(dir.path().join("out"));
        in_pool(threads, || pipeline::run_all(&cfg, &res, true)).map_err(|e| e.to_string())?;
        Ok(snapshot(dir.path()))
    };
    let first = tryv!(run(1));
    let second = tryv!(run(1));
    let parallel = tryv!(run(4));
    let required = ["out/master_dataset.csv", "out/benchmark/split.csv", "out/report/report.csv"];
    let missing: Vec<&str> = required.iter().copied().filter(|r| !first.contains_key(Path::new(r))).collect();
    let n_models = first.keys().filter(|k| k.starts_with("out/models")).count();
    let serial_diff = diff(&first, &second);
    let report = Path::new("out/report/report.csv");
    let report_same = first.get(report) == parallel.get(report);
    let parallel_diff = diff(&first, &parallel);
    Verdict::check(
        missing.is_empty() && n_models > 0 && serial_diff.is_empty() && report_same,
        format!(
            "{} files ({n_models} models); differing between 1-thread runs: {serial_diff:?}; \
             report.csv identical at 4 threads = {report_same}; other files differing at 4 threads: {parallel_diff:?}",
            first.len()
        ),
    )
}

pub const MIMIC_ENV: &str = "EDBENCH_MIMIC_DIR";

pub struct MimicRun {
    pub stages: Vec<StageSummary>,
    pub prevalence: [f64; 3],
    pub report: EvalReport,
}

/// Pipeline on credentialed data when `EDBENCH_MIMIC_DIR` points at the
/// nine decompressed tables. `None` when the variable is unset.
pub fn mimic_run() -> Option<Result<MimicRun, String>> {
    let input = PathBuf::from(std::env::var_os(MIMIC_ENV)?);
    Some((|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut cfg = PipelineConfig {
            input_dir: input,
            output_dir: dir.path().join("out"),
            timing: Timing::None,
            model_kinds: vec![ModelKind::Gb],
            ..PipelineConfig::default()
        };
        cfg.evaluations = ["hospitalization", "critical"]
            .iter()
            .map(|t| Evaluation { task: t.to_string(), time_point: TimePoint::Triage, scores: true })
            .collect();
        let res = cfg.load_resources().map_err(|e| e.to_string())?;
        let e = |x: edbench::Error| x.to_string();
        let mut stages = vec![pipeline::extract_master(&cfg, &res).map_err(e)?];
        stages.push(pipeline::build_benchmark(&cfg, &res).map_err(e)?);
        let sel = Selection::default();
        stages.push(pipeline::train_models(&cfg, &res, &sel).map_err(e)?);
        let (report, s) = pipeline::evaluate(&cfg, &res, &sel).map_err(e)?;
        stages.push(s);
        let layout = Layout::new(&cfg.output_dir);
        let train = Frame::read_csv_path(&layout.train()).map_err(e)?;
        let test = Frame::read_csv_path(&layout.test()).map_err(e)?;
        let rate = |col: &str| {
            let pos = [&train, &test].iter().map(|f| f.column(col).unwrap().iter().filter(|&&v| v == 1.0).count()).sum::<usize>();
            pos as f64 / (train.n_rows() + test.n_rows()) as f64
        };
        let prevalence =
            [rate("outcome_hospitalization"), rate("outcome_critical"), rate("outcome_ed_revisit_3d")];
        Ok(MimicRun { stages, prevalence, report })
    })())
}

fn within(value: usize, target: usize, rel: f64) -> bool {
    (value as f64 - target as f64).abs() <= rel * target as f64
}

fn stage_rows(run: &MimicRun, key: &str) -> usize {
    run.stages.iter().find_map(|s| s.rows.get(key).copied()).unwrap_or(0)
}

pub fn mimic_cardinality(run: &MimicRun) -> Verdict {
    let (visits, subjects) = (stage_rows(run, "master_rows"), stage_rows(run, "master_subjects"));
    let exact = visits == 448_972 && subjects == 216_877;
    Verdict::check(
        within(visits, 448_972, 0.01) && within(subjects, 216_877, 0.01),
        format!("{visits} visits, {subjects} patients (exact match: {exact})"),
    )
}

pub fn mimic_cohort(run: &MimicRun) -> Verdict {
    let kept = stage_rows(run, "cohort_rows");
    Verdict::check(within(kept, 441_437, 0.01), format!("{kept} episodes after exclusions"))
}

pub fn mimic_prevalence(run: &MimicRun) -> Verdict {
    let targets = [0.4734, 0.0592, 0.0347];
    let ok = run.prevalence.iter().zip(targets).all(|(p, t)| (p - t).abs() <= 0.005);
    Verdict::check(
        ok,
        format!(
            "hospitalization {:.4}, critical {:.4}, reattendance {:.4}",
            run.prevalence[0], run.prevalence[1], run.prevalence[2]
        ),
    )
}

pub fn mimic_metrics(run: &MimicRun) -> Verdict {
    let get = |task: &str, model: &str| {
        run.report.rows.iter().find(|r| r.task == task && r.model == model).map(|r| r.auroc.value)
    };
    let checks = [("critical", "GB", 0.881), ("hospitalization", "GB", 0.820), ("hospitalization", "ESI", 0.711)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (task, model, target) in checks {
        match get(task, model) {
            Some(a) => {
                ok &= (a - target).abs() <= 0.015;
                parts.push(format!("{model} {task} {a:.3} (target {target})"));
            }
            None => {
                ok = false;
                parts.push(format!("{model} {task} missing"));
            }
        }
    }
    Verdict::check(ok, parts.join("; "))
}
