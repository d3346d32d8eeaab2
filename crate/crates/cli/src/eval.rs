//! `drlc eval`: deterministic multi-run evaluation of one checkpoint.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use drlc_core::agents::{evaluate, CheckpointMeta, EpisodeOutcome, Model};
use drlc_core::envs::{load_scenario, write_trace_csv, EnvConfig, ScenarioName, OBSERVATION_DIM};
use drlc_core::metrics::{
    aggregate, export_report, render_report, write_episodes_csv, AggregateReport, EpisodeMetrics,
    ReportFormat,
};
use drlc_core::Error;
use serde::{Deserialize, Serialize};

use crate::config::{env_config, env_overrides, EnvFlags, FileConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

pub const DEFAULT_RUNS: usize = 10;
pub const EPISODES_FILE: &str = "episodes.csv";
pub const REPORT_FILE: &str = "report.csv";
pub const TABLE_FILE: &str = "report.txt";

#[derive(Debug, Clone, clap::Args)]
pub struct EvalArgs {
    /// Checkpoint to evaluate.
    #[arg(long)]
    pub model: PathBuf,
    /// Evaluation scenario; defaults to the training scenario.
    #[arg(long)]
    pub env: Option<ScenarioName>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Seed of the first episode; episode k uses seed + k.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write one step trace CSV per episode.
    #[arg(long)]
    pub trace: bool,
    #[command(flatten)]
    pub env_flags: EnvFlags,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalPlan {
    pub model: PathBuf,
    pub runs: usize,
    pub seed: u64,
    pub trace: bool,
    pub env: EnvConfig,
}

/// Loads a checkpoint and checks it fits the environment's observations.
pub fn load_model(path: &Path) -> CliResult<(Model, CheckpointMeta)> {
    let (model, meta) = Model::load(path)?;
    if model.input_dim() != OBSERVATION_DIM {
        return Err(CliError::Mismatch(format!(
            "{} expects {} inputs, the environment observes {OBSERVATION_DIM}",
            path.display(),
            model.input_dim()
        )));
    }
    Ok((model, meta))
}

pub fn trace_name(k: usize) -> String {
    format!("trace_{k}.csv")
}

/// Evaluates `model` on `env` for `runs` episodes.
pub fn evaluate_model(
    model: &Model,
    env: &EnvConfig,
    runs: usize,
    seed: u64,
) -> CliResult<(Vec<EpisodeOutcome>, AggregateReport)> {
    if runs == 0 {
        return Err(CliError::Usage("--runs must be positive".into()));
    }
    let scenario = Arc::new(load_scenario(env.scenario)?);
    let outcomes = evaluate(model, env, scenario, runs, seed)?;
    let metrics: Vec<EpisodeMetrics> = outcomes.iter().map(|o| o.metrics.clone()).collect();
    let report = aggregate(&metrics)?;
    Ok((outcomes, report))
}

/// Writes the per-episode CSV and the aggregate report; returns file names.
pub fn write_outputs(
    dir: &Path,
    outcomes: &[EpisodeOutcome],
    report: &AggregateReport,
    trace: bool,
) -> CliResult<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })?;
    let metrics: Vec<EpisodeMetrics> = outcomes.iter().map(|o| o.metrics.clone()).collect();
    write_episodes_csv(&dir.join(EPISODES_FILE), &metrics)?;
    export_report(report, &dir.join(REPORT_FILE), ReportFormat::Csv)?;
    export_report(report, &dir.join(TABLE_FILE), ReportFormat::Table)?;
    let mut files = vec![EPISODES_FILE.to_string(), REPORT_FILE.into(), TABLE_FILE.into()];
    if trace {
        for (k, o) in outcomes.iter().enumerate() {
            write_trace_csv(&dir.join(trace_name(k)), &o.trace)?;
            files.push(trace_name(k));
        }
    }
    Ok(files)
}

pub fn run(args: &EvalArgs, argv: &[String]) -> CliResult<()> {
    let model_path = std::path::absolute(&args.model)
        .map_err(|e| Error::Io { path: args.model.clone(), source: e })?;
    let (model, meta) = load_model(&model_path)?;
    let file = FileConfig::load(args.config.as_deref())?;
    let scenario = match args.env.or(file.scenario()?) {
        Some(s) => s,
        None => meta.env.parse::<ScenarioName>()?,
    };
    let mut env = env_config(scenario, &env_overrides(&file, &args.env_flags))?;
    env.action_kind = model.action_kind();
    let plan = EvalPlan {
        model: model_path,
        runs: args.runs.or(file.runs).unwrap_or(DEFAULT_RUNS),
        seed: args.seed.or(file.seed).unwrap_or(0),
        trace: args.trace,
        env,
    };
    execute_with(&plan, &model, &args.out, argv)
}

pub fn execute(plan: &EvalPlan, out: &Path, argv: &[String]) -> CliResult<()> {
    let (model, _) = load_model(&plan.model)?;
    execute_with(plan, &model, out, argv)
}

fn execute_with(plan: &EvalPlan, model: &Model, out: &Path, argv: &[String]) -> CliResult<()> {
    let mut env = plan.env.clone();
    env.action_kind = model.action_kind();
    let (outcomes, report) = evaluate_model(model, &env, plan.runs, plan.seed)?;
    let mut manifest = RunManifest::begin("eval", argv, serde_json::to_value(plan)?, plan.seed);
    manifest.record_fixture(&load_scenario(env.scenario)?)?;
    manifest.checkpoints.push(plan.model.display().to_string());
    manifest.outputs = write_outputs(out, &outcomes, &report, plan.trace)?;
    print!("{}", render_report(&report, ReportFormat::Table)?);
    manifest.finish(out, "ok")
}
