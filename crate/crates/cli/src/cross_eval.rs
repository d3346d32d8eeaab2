//! `drlc cross-eval`: every checkpoint under a directory on every scenario.

use std::path::{Path, PathBuf};

use drlc_core::envs::{load_scenario, ScenarioName};
use drlc_core::metrics::{write_cross_eval, CrossEvalCell};
use drlc_core::Error;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use walkdir::WalkDir;

use crate::config::{env_config, env_overrides, EnvFlags, FileConfig};
use crate::error::{CliError, CliResult};
use crate::eval::{evaluate_model, load_model, write_outputs, DEFAULT_RUNS};
use crate::manifest::RunManifest;

pub const CELLS_DIR: &str = "cells";

#[derive(Debug, Clone, clap::Args)]
pub struct CrossEvalArgs {
    /// Directory searched recursively for `.drlc` checkpoints.
    #[arg(long)]
    pub models: PathBuf,
    /// Comma-separated evaluation scenarios.
    #[arg(long, value_delimiter = ',', required = true)]
    pub envs: Vec<ScenarioName>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub env_flags: EnvFlags,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossEvalPlan {
    /// (row label, checkpoint path)
    pub models: Vec<(String, PathBuf)>,
    pub scenarios: Vec<ScenarioName>,
    pub runs: usize,
    pub seed: u64,
    /// Environment keys applied on top of each scenario's defaults.
    pub env_overrides: Map<String, Value>,
}

/// Checkpoints under `root`, sorted, labelled by their relative path
/// without extension.
pub fn discover(root: &Path) -> CliResult<Vec<(String, PathBuf)>> {
    if !root.is_dir() {
        return Err(CliError::Usage(format!("{} is not a directory", root.display())));
    }
    let mut found = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| CliError::Usage(e.to_string()))?;
        let path = entry.path();
        if entry.file_type().is_file() && path.extension().is_some_and(|x| x == "drlc") {
            let rel = path.strip_prefix(root).expect("walk stays under its root");
            let label = rel
                .with_extension("")
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            let abs = std::path::absolute(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
            found.push((label, abs));
        }
    }
    Ok(found)
}

pub fn run(args: &CrossEvalArgs, argv: &[String]) -> CliResult<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let mut scenarios = Vec::new();
    for s in &args.envs {
        if !scenarios.contains(s) {
            scenarios.push(*s);
        }
    }
    let plan = CrossEvalPlan {
        models: discover(&args.models)?,
        scenarios,
        runs: args.runs.or(file.runs).unwrap_or(DEFAULT_RUNS),
        seed: args.seed.or(file.seed).unwrap_or(0),
        env_overrides: env_overrides(&file, &args.env_flags),
    };
    execute(&plan, &args.out, argv)
}

pub fn execute(plan: &CrossEvalPlan, out: &Path, argv: &[String]) -> CliResult<()> {
    if plan.models.is_empty() {
        return Err(CliError::Usage("no checkpoints to evaluate".into()));
    }
    if plan.scenarios.is_empty() {
        return Err(CliError::Usage("no evaluation scenarios".into()));
    }
    let envs = plan
        .scenarios
        .iter()
        .map(|s| env_config(*s, &plan.env_overrides))
        .collect::<CliResult<Vec<_>>>()?;
    let models = plan
        .models
        .iter()
        .map(|(_, p)| load_model(p))
        .collect::<CliResult<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..models.len())
        .flat_map(|i| (0..envs.len()).map(move |j| (i, j)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(i, j)| {
            let (model, meta) = &models[i];
            let mut env = envs[j].clone();
            env.action_kind = model.action_kind();
            let (outcomes, report) = evaluate_model(model, &env, plan.runs, plan.seed)?;
            let label = &plan.models[i].0;
            let dir = out.join(CELLS_DIR).join(label).join(env.scenario.as_str());
            write_outputs(&dir, &outcomes, &report, false)?;
            Ok(CrossEvalCell {
                model: label.clone(),
                algo: meta.algorithm.to_string(),
                trained_on: meta.env.clone(),
                scenario: env.scenario.to_string(),
                report,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut manifest = RunManifest::begin("cross-eval", argv, serde_json::to_value(plan)?, plan.seed);
    for s in &plan.scenarios {
        manifest.record_fixture(&load_scenario(*s)?)?;
    }
    manifest.checkpoints = plan.models.iter().map(|(_, p)| p.display().to_string()).collect();
    for path in write_cross_eval(out, &cells)? {
        manifest.outputs.push(path.file_name().expect("matrix file").to_string_lossy().into_owned());
    }
    for c in &cells {
        println!(
            "{} ({}) on {}: onlane {} collisions {}",
            c.model, c.algo, c.scenario, c.report.means.onlane_rate, c.report.means.col_rate
        );
    }
    manifest.finish(out, "ok")
}
