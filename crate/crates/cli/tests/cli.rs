use std::path::Path;
use std::process::{Command, Output};

fn edbench(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edbench"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, extra: &str) {
    let text = format!(
        "input_dir = \"raw\"\noutput_dir = \"out\"\nseed = 7\nbootstrap = 20\ntiming = \"none\"\n{extra}\n\
         [models.rf]\nn_trees = 20\n[models.gb]\nn_stages = 30\n[models.mlp]\nepochs = 5\n"
    );
    std::fs::write(dir.join("edbench.toml"), text).unwrap();
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn all_on_synthetic_data_then_rerun_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "");
    let args = ["--config", "edbench.toml", "all", "--n-visits", "3000"];
    let first = edbench(dir.path(), &args);
    assert!(first.status.success(), "{}", stderr(&first));

    let out = dir.path().join("out");
    let report = std::fs::read_to_string(out.join("report/report.csv")).unwrap();
    let rows: Vec<&str> = report.lines().skip(1).collect();
    let models: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.split(',').nth(2).unwrap()).collect();
    let tasks: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.split(',').next().unwrap()).collect();
    assert!(models.len() >= 5 && tasks.len() >= 3, "{models:?} {tasks:?}");
    assert!(out.join("run_manifest_all.json").exists());
    assert!(out.join("report/figure_auroc.svg").exists());

    let second = edbench(dir.path(), &args);
    assert!(second.status.success(), "{}", stderr(&second));
    assert_eq!(std::fs::read_to_string(out.join("report/report.csv")).unwrap(), report);

    // Stage by stage with filters, then predict with one saved model.
    let ev = edbench(
        dir.path(),
        &["--config", "edbench.toml", "evaluate", "--time-point", "triage", "--task", "critical", "--model", "GB"],
    );
    assert!(ev.status.success(), "{}", stderr(&ev));
    let pred = edbench(
        dir.path(),
        &[
            "predict",
            "--model",
            "out/models/triage/critical/GB.json",
            "--input",
            "out/benchmark/test.csv",
            "--output",
            "out/pred.csv",
        ],
    );
    assert!(pred.status.success(), "{}", stderr(&pred));
    let pred = std::fs::read_to_string(out.join("pred.csv")).unwrap();
    assert!(pred.starts_with("stay_id,probability\n"));
}

#[test]
fn missing_input_is_a_config_error_without_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "");
    std::fs::create_dir(dir.path().join("raw")).unwrap();
    let o = edbench(dir.path(), &["--config", "edbench.toml", "extract-master"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("config error"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn bad_config_and_missing_stage_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "test_fraction = 1.5");
    let o = edbench(dir.path(), &["--config", "edbench.toml", "build-benchmark"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    write_config(dir.path(), "");
    let o = edbench(dir.path(), &["--config", "edbench.toml", "train", "--model", "XGB"]);
    assert_eq!(o.status.code(), Some(2), "clap rejects unknown model: {}", stderr(&o));
}

#[test]
fn synth_writes_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "");
    let o = edbench(dir.path(), &["--config", "edbench.toml", "synth", "--n-visits", "500"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["edstays.csv", "triage.csv", "patients.csv", "ground_truth.csv"] {
        assert!(dir.path().join("raw").join(f).exists(), "{f}");
    }
    let manifest = std::fs::read_to_string(dir.path().join("out/run_manifest_synth.json")).unwrap();
    assert!(manifest.contains("\"config_hash\""));
}

#[test]
fn shipped_example_config_is_valid() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/edbench.toml");
    let cfg = edbench::config::PipelineConfig::from_path(&path).unwrap();
    assert_eq!(cfg.evaluations.len(), 4);
    cfg.load_resources().unwrap();
}
