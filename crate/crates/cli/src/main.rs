use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{error, info};

use edbench::config::PipelineConfig;
use edbench::models::{ModelKind, TimePoint};
use edbench::pipeline::{self, RunManifest, Selection, StageSummary};
use edbench::ErrorCategory;

/// Emergency-department benchmark pipeline.
///
/// Exit codes: 0 success, 2 configuration error, 3 data error,
/// 4 integrity error.
#[derive(Parser, Debug)]
#[command(name = "edbench", version)]
struct Cli {
    /// Pipeline configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for parallel stages. 1 is fully deterministic.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Override the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Log level: error, warn, info, debug, trace.
    #[arg(long, global = true, default_value = "info")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Filter {
    /// Restrict to one prediction time point.
    #[arg(long, value_parser = parse_time_point)]
    time_point: Option<TimePoint>,

    /// Restrict to one task, e.g. `hospitalization`.
    #[arg(long)]
    task: Option<String>,

    /// Restrict to one model: LR, RF, GB or MLP.
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelKind>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write synthetic raw tables (and ground truth) to the input directory.
    Synth {
        /// Number of visits; overrides the configured patient count.
        #[arg(long)]
        n_visits: Option<usize>,
    },
    /// Ingest, link and label the raw tables into master_dataset.csv.
    ExtractMaster,
    /// Exclusions, cleaning, train/test split and imputation.
    BuildBenchmark,
    /// Fit models on the training split.
    Train(Filter),
    /// Score models and clinical scores on the test split.
    Evaluate(Filter),
    /// Apply a saved model to a benchmark-format CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Every stage in order.
    All {
        /// Generate synthetic input first.
        #[arg(long)]
        synth: bool,
        /// Number of synthetic visits (implies --synth).
        #[arg(long)]
        n_visits: Option<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth { .. } => "synth",
            Command::ExtractMaster => "extract-master",
            Command::BuildBenchmark => "build-benchmark",
            Command::Train(_) => "train",
            Command::Evaluate(_) => "evaluate",
            Command::Predict { .. } => "predict",
            Command::All { .. } => "all",
        }
    }
}

fn parse_time_point(s: &str) -> Result<TimePoint, String> {
    TimePoint::parse(s).ok_or_else(|| format!("expected `triage` or `disposition`, got `{s}`"))
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    ModelKind::parse(s).ok_or_else(|| format!("expected one of LR, RF, GB, MLP, got `{s}`"))
}

fn selection(f: Filter) -> Selection {
    Selection { time_point: f.time_point, task: f.task, model: f.model }
}

fn load_config(cli: &Cli) -> edbench::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::from_path(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn log_stage(s: &StageSummary) {
    let rows: Vec<String> = s.rows.iter().map(|(k, v)| format!("{k}={v}")).collect();
    info!("{}: {}", s.stage, rows.join(" "));
    for (kind, n) in &s.issues {
        log::warn!("{}: {n} x {kind}", s.stage);
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    let command = cli.command.name();
    let mut manifest = RunManifest::new(command, &cfg, cli.threads);

    match cli.command {
        Command::Synth { n_visits } => {
            if n_visits.is_some() {
                cfg.synth.n_visits = n_visits;
            }
            cfg.validate()?;
            manifest = RunManifest::new(command, &cfg, cli.threads);
            manifest.stages.push(pipeline::run_synth(&cfg)?);
        }
        Command::ExtractMaster => {
            let res = cfg.load_resources()?;
            manifest.stages.push(pipeline::extract_master(&cfg, &res)?);
        }
        Command::BuildBenchmark => {
            let res = cfg.load_resources()?;
            manifest.stages.push(pipeline::build_benchmark(&cfg, &res)?);
        }
        Command::Train(f) => {
            let res = cfg.load_resources()?;
            manifest.stages.push(pipeline::train_models(&cfg, &res, &selection(f))?);
        }
        Command::Evaluate(f) => {
            let res = cfg.load_resources()?;
            let (report, stage) = pipeline::evaluate(&cfg, &res, &selection(f))?;
            for r in &report.rows {
                info!("{}@{} {}: AUROC {}", r.task, r.time_point, r.model, r.auroc.format());
            }
            manifest.stages.push(stage);
        }
        Command::All { synth, n_visits } => {
            if n_visits.is_some() {
                cfg.synth.n_visits = n_visits;
            }
            cfg.validate()?;
            manifest = RunManifest::new(command, &cfg, cli.threads);
            let res = cfg.load_resources()?;
            manifest.stages = pipeline::run_all(&cfg, &res, synth || n_visits.is_some())?;
        }
        Command::Predict { model, input, output } => {
            // Reads and writes explicit paths only; no run manifest.
            let n = pipeline::predict(&model, &input, &output)?;
            info!("predict: wrote {n} rows to {}", output.display());
            return Ok(());
        }
    }
    manifest.stages.iter().for_each(log_stage);
    let path = manifest.write(&cfg.output_dir)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<edbench::Error>().map(edbench::Error::category) {
        Some(ErrorCategory::Config) => 2,
        Some(ErrorCategory::Data) => 3,
        Some(ErrorCategory::Integrity) => 4,
        // Failures outside the library (thread pool, logging) are setup problems.
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format(|buf, rec| writeln!(buf, "{:<5} {}", rec.level(), rec.args()))
        .init();

    let result = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
        .context("building the thread pool")
        .and_then(|_| run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            let class = match code {
                3 => "data error",
                4 => "integrity error",
                _ => "config error",
            };
            error!("{class}: {e:#}");
            ExitCode::from(code)
        }
    }
}
