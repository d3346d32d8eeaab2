//! `drlc train`: independently seeded training runs.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use drlc_core::agents::{dqn_train, trpo_train, Algorithm, DqnConfig, Model, TrainingLog, TrpoConfig};
use drlc_core::envs::{load_scenario, ActionKind, EnvConfig, Environment, Scenario, ScenarioName};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{env_config, env_overrides, parse_grid, EnvFlags, FileConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

pub const DEFAULT_ITERATIONS: usize = 10_000;
pub const DEFAULT_GRID: (usize, usize) = (5, 5);

#[derive(Debug, Clone, clap::Args)]
pub struct TrainArgs {
    /// Training scenario.
    #[arg(long)]
    pub env: Option<ScenarioName>,
    /// dqn or trpo
    #[arg(long)]
    pub algo: Option<Algorithm>,
    /// Environment steps per model.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Seed of the first model; model k uses seed + k.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of models to train.
    #[arg(long)]
    pub repeat: Option<usize>,
    /// DQN action grid as STEERxACCEL levels.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
    #[command(flatten)]
    pub env_flags: EnvFlags,
    /// JSON config applied under the explicit flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Fully resolved training configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainPlan {
    pub algo: Algorithm,
    pub iterations: usize,
    pub seed: u64,
    pub repeat: usize,
    pub env: EnvConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dqn: Option<DqnConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trpo: Option<TrpoConfig>,
}

fn section<T: serde::de::DeserializeOwned + Default>(v: &Option<Value>, name: &str) -> CliResult<T> {
    match v {
        None => Ok(T::default()),
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| CliError::Usage(format!("invalid {name} config: {e}"))),
    }
}

impl TrainPlan {
    pub fn resolve(args: &TrainArgs) -> CliResult<Self> {
        let file = FileConfig::load(args.config.as_deref())?;
        let scenario = args
            .env
            .or(file.scenario()?)
            .ok_or_else(|| CliError::Usage("--env is required".into()))?;
        let algo = args
            .algo
            .or(file.algo)
            .ok_or_else(|| CliError::Usage("--algo is required".into()))?;
        let mut env = env_config(scenario, &env_overrides(&file, &args.env_flags))?;
        let (dqn, trpo) = match algo {
            Algorithm::Dqn => {
                if let Some((n, m)) = args.grid {
                    env.action_kind = ActionKind::Grid { n, m };
                } else if env.action_kind == ActionKind::Continuous {
                    let (n, m) = DEFAULT_GRID;
                    env.action_kind = ActionKind::Grid { n, m };
                }
                (Some(section::<DqnConfig>(&file.dqn, "dqn")?), None)
            }
            Algorithm::Trpo => {
                if args.grid.is_some() {
                    return Err(CliError::Usage("--grid only applies to dqn".into()));
                }
                env.action_kind = ActionKind::Continuous;
                (None, Some(section::<TrpoConfig>(&file.trpo, "trpo")?))
            }
        };
        let plan = TrainPlan {
            algo,
            iterations: args.iterations.or(file.iterations).unwrap_or(DEFAULT_ITERATIONS),
            seed: args.seed.or(file.seed).unwrap_or(0),
            repeat: args.repeat.or(file.repeat).unwrap_or(1),
            env,
            dqn,
            trpo,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.iterations == 0 || self.repeat == 0 {
            return Err(CliError::Usage("--iterations and --repeat must be positive".into()));
        }
        let usage = |e: drlc_core::Error| CliError::Usage(e.to_string());
        self.env.validate().map_err(usage)?;
        match self.algo {
            Algorithm::Dqn => {
                if !matches!(self.env.action_kind, ActionKind::Grid { .. }) {
                    return Err(CliError::Usage("dqn needs a grid action kind".into()));
                }
                self.dqn.as_ref().ok_or_else(|| CliError::Usage("missing dqn config".into()))?.validate().map_err(usage)
            }
            Algorithm::Trpo => self
                .trpo
                .as_ref()
                .ok_or_else(|| CliError::Usage("missing trpo config".into()))?
                .validate()
                .map_err(usage),
        }
    }

    /// Trains model `k` and returns it with its training log.
    pub fn train_one(&self, scenario: Arc<Scenario>, k: usize) -> CliResult<(Model, TrainingLog)> {
        let seed = self.seed.wrapping_add(k as u64);
        let mut cfg = self.env.clone();
        cfg.seed = seed;
        let mut env = Environment::with_scenario(cfg, scenario)?;
        Ok(match self.algo {
            Algorithm::Dqn => {
                let (m, log) = dqn_train(&mut env, self.dqn.as_ref().expect("validated"), self.iterations, seed)?;
                (Model::Dqn(m), log)
            }
            Algorithm::Trpo => {
                let (m, log) = trpo_train(&mut env, self.trpo.as_ref().expect("validated"), self.iterations, seed)?;
                (Model::Trpo(m), log)
            }
        })
    }

    fn checkpoint_config(&self, seed: u64) -> Value {
        let mut env = self.env.clone();
        env.seed = seed;
        match self.algo {
            Algorithm::Dqn => json!({ "env": env, "dqn": self.dqn }),
            Algorithm::Trpo => json!({ "env": env, "trpo": self.trpo }),
        }
    }
}

pub fn checkpoint_name(k: usize) -> String {
    format!("model_{k}.drlc")
}

pub fn log_name(k: usize) -> String {
    format!("train_log_{k}.csv")
}

pub fn run(args: &TrainArgs, argv: &[String]) -> CliResult<()> {
    let plan = TrainPlan::resolve(args)?;
    execute(&plan, &args.out, argv)
}

/// Trains every model of `plan` into `out`. Outputs of finished models are
/// kept when another one fails; the manifest records the outcome.
pub fn execute(plan: &TrainPlan, out: &Path, argv: &[String]) -> CliResult<()> {
    plan.validate()?;
    let scenario = Arc::new(load_scenario(plan.env.scenario)?);
    std::fs::create_dir_all(out).map_err(|e| drlc_core::Error::Io { path: out.into(), source: e })?;
    let mut manifest = RunManifest::begin("train", argv, serde_json::to_value(plan)?, plan.seed);
    manifest.record_fixture(&scenario)?;

    let results: Vec<CliResult<()>> = (0..plan.repeat)
        .into_par_iter()
        .map(|k| {
            let (model, log) = plan.train_one(scenario.clone(), k)?;
            let seed = plan.seed.wrapping_add(k as u64);
            model.save(
                &out.join(checkpoint_name(k)),
                plan.env.scenario.as_str(),
                seed,
                plan.iterations as u64,
                Some(plan.checkpoint_config(seed)),
            )?;
            log.write_csv(&out.join(log_name(k)))?;
            eprintln!(
                "model {k}: {} steps, {} episodes",
                plan.iterations,
                log.rows.len()
            );
            Ok(())
        })
        .collect();

    let mut first_err = None;
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(()) => {
                manifest.checkpoints.push(checkpoint_name(k));
                manifest.outputs.push(log_name(k));
            }
            Err(e) => {
                eprintln!("model {k} failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    let status = match &first_err {
        None => "ok".to_string(),
        Some(e) => format!("failed: {e}"),
    };
    manifest.finish(out, &status)?;
    first_err.map_or(Ok(()), Err)
}
