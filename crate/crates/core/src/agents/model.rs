//! Trained models: checkpoint conversion and deterministic evaluation.

use std::path::Path;
use std::sync::Arc;

use super::checkpoint::{load_checkpoint, save_checkpoint, Algorithm, CheckpointMeta, Tensor};
use super::dqn::DqnModel;
use super::mlp::{Architecture, Mlp};
use super::policy::{GaussianPolicy, ACTION_DIM};
use super::trpo::TrpoModel;
use crate::dynamics::{Action, ActionGrid};
use crate::envs::{ActionKind, EnvConfig, Environment, Scenario, TraceRow, GRID_MAX_STEERING};
use crate::metrics::{EpisodeLogger, EpisodeMetrics};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Dqn(DqnModel),
    Trpo(TrpoModel),
}

fn mlp_tensors(net: &Mlp, out: &mut Vec<Tensor>) {
    let sizes = net.architecture().sizes();
    for (l, (w, b)) in net.layers().into_iter().enumerate() {
        out.push(Tensor::from_f64(vec![sizes[l], sizes[l + 1]], w));
        out.push(Tensor::from_f64(vec![sizes[l + 1]], b));
    }
}

fn mlp_tensor_count(arch: &Architecture) -> usize {
    2 * (arch.hidden.len() + 1)
}

fn mlp_from_tensors(arch: &Architecture, tensors: &[Tensor]) -> Result<Mlp> {
    let sizes = arch.sizes();
    if tensors.len() != mlp_tensor_count(arch) {
        return Err(Error::ArchitectureMismatch(format!(
            "{} tensors for a network with {} layers",
            tensors.len(),
            sizes.len() - 1
        )));
    }
    let mut params = Vec::with_capacity(arch.num_params());
    for (l, pair) in tensors.chunks(2).enumerate() {
        let (want_w, want_b) = (vec![sizes[l], sizes[l + 1]], vec![sizes[l + 1]]);
        if pair[0].dims != want_w || pair[1].dims != want_b {
            return Err(Error::ArchitectureMismatch(format!(
                "layer {l} has shapes {:?}/{:?}, expected {want_w:?}/{want_b:?}",
                pair[0].dims, pair[1].dims
            )));
        }
        params.extend(pair[0].to_f64());
        params.extend(pair[1].to_f64());
    }
    Mlp::from_params(arch.clone(), params)
}

impl Model {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            Model::Dqn(_) => Algorithm::Dqn,
            Model::Trpo(_) => Algorithm::Trpo,
        }
    }

    pub fn action_kind(&self) -> ActionKind {
        match self {
            Model::Dqn(m) => ActionKind::Grid {
                n: m.grid.steering_levels().len(),
                m: m.grid.accel_levels().len(),
            },
            Model::Trpo(_) => ActionKind::Continuous,
        }
    }

    /// Observation size the model expects.
    pub fn input_dim(&self) -> usize {
        match self {
            Model::Dqn(m) => m.q.architecture().input,
            Model::Trpo(m) => m.policy.mean.architecture().input,
        }
    }

    /// Greedy action for DQN, mean action for TRPO.
    pub fn act(&self, obs: &[f64]) -> Result<Action> {
        match self {
            Model::Dqn(m) => m.grid.discretize(m.greedy(obs)?),
            Model::Trpo(m) => m.policy.mean_action(obs),
        }
    }

    pub fn to_checkpoint(
        &self,
        env: &str,
        seed: u64,
        iterations: u64,
        config: Option<serde_json::Value>,
    ) -> (CheckpointMeta, Vec<Tensor>) {
        let mut tensors = Vec::new();
        let (architecture, value_architecture) = match self {
            Model::Dqn(m) => {
                mlp_tensors(&m.q, &mut tensors);
                (m.q.architecture().clone(), None)
            }
            Model::Trpo(m) => {
                mlp_tensors(&m.policy.mean, &mut tensors);
                tensors.push(Tensor::from_f64(vec![ACTION_DIM], &m.policy.log_std()));
                mlp_tensors(&m.value, &mut tensors);
                (
                    m.policy.mean.architecture().clone(),
                    Some(m.value.architecture().clone()),
                )
            }
        };
        let meta = CheckpointMeta {
            algorithm: self.algorithm(),
            architecture,
            value_architecture,
            action_kind: self.action_kind(),
            env: env.to_string(),
            seed,
            iterations,
            tensors: tensors.len(),
            config,
        };
        (meta, tensors)
    }

    pub fn from_checkpoint(meta: &CheckpointMeta, tensors: &[Tensor]) -> Result<Self> {
        match meta.algorithm {
            Algorithm::Dqn => {
                let ActionKind::Grid { n, m } = meta.action_kind else {
                    return Err(Error::ArchitectureMismatch(
                        "DQN checkpoint without an action grid".into(),
                    ));
                };
                if n * m != meta.architecture.output {
                    return Err(Error::ArchitectureMismatch(format!(
                        "{n}x{m} grid but the Q-network has {} outputs",
                        meta.architecture.output
                    )));
                }
                let q = mlp_from_tensors(&meta.architecture, tensors)?;
                let grid = ActionGrid::uniform(n, m, GRID_MAX_STEERING)?;
                Ok(Model::Dqn(DqnModel { q, grid }))
            }
            Algorithm::Trpo => {
                let value_arch = meta.value_architecture.as_ref().ok_or_else(|| {
                    Error::ArchitectureMismatch("TRPO checkpoint without a value network".into())
                })?;
                let k = mlp_tensor_count(&meta.architecture);
                if tensors.len() != k + 1 + mlp_tensor_count(value_arch) {
                    return Err(Error::ArchitectureMismatch(format!(
                        "{} tensors do not match the TRPO architectures",
                        tensors.len()
                    )));
                }
                let mean = mlp_from_tensors(&meta.architecture, &tensors[..k])?;
                if tensors[k].dims != [ACTION_DIM] {
                    return Err(Error::ArchitectureMismatch("log-std tensor has the wrong shape".into()));
                }
                let ls = tensors[k].to_f64();
                let policy = GaussianPolicy::new(mean, [ls[0], ls[1]])?;
                let value = mlp_from_tensors(value_arch, &tensors[k + 1..])?;
                Ok(Model::Trpo(TrpoModel { policy, value }))
            }
        }
    }

    pub fn save(&self, path: &Path, env: &str, seed: u64, iterations: u64, config: Option<serde_json::Value>) -> Result<()> {
        let (meta, tensors) = self.to_checkpoint(env, seed, iterations, config);
        save_checkpoint(path, &meta, &tensors)
    }

    pub fn load(path: &Path) -> Result<(Self, CheckpointMeta)> {
        let (meta, tensors) = load_checkpoint(path)?;
        Ok((Model::from_checkpoint(&meta, &tensors)?, meta))
    }

    /// Loads a checkpoint that must hold a model of `algorithm`.
    pub fn load_as(path: &Path, algorithm: Algorithm) -> Result<(Self, CheckpointMeta)> {
        let (meta, tensors) = load_checkpoint(path)?;
        if meta.algorithm != algorithm {
            return Err(Error::ArchitectureMismatch(format!(
                "{} holds a {} model, expected {algorithm}",
                path.display(),
                meta.algorithm
            )));
        }
        Ok((Model::from_checkpoint(&meta, &tensors)?, meta))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub metrics: EpisodeMetrics,
    pub trace: Vec<TraceRow>,
}

/// Runs `runs` episodes with seeds `seed, seed + 1, …`, choosing actions with
/// `policy`.
pub fn run_episodes<F>(
    config: &EnvConfig,
    scenario: Arc<Scenario>,
    runs: usize,
    seed: u64,
    mut policy: F,
) -> Result<Vec<EpisodeOutcome>>
where
    F: FnMut(&[f64]) -> Result<Action>,
{
    if runs == 0 {
        return Err(Error::InvalidArgument("at least one run is needed".into()));
    }
    let mut env = Environment::with_scenario(config.clone(), scenario)?;
    let mut out = Vec::with_capacity(runs);
    for k in 0..runs {
        let mut obs = env.reset_seed(seed.wrapping_add(k as u64))?;
        let mut logger = EpisodeLogger::new();
        loop {
            let res = env.step(policy(&obs)?)?;
            logger.record_step(env.ego(), res.info.action_applied, &res.info.lane_relation, config.dt)?;
            if res.done() {
                break;
            }
            obs = res.observation;
        }
        out.push(EpisodeOutcome {
            metrics: logger.finalize()?,
            trace: env.trace().to_vec(),
        });
    }
    Ok(out)
}

/// Deterministic evaluation of a trained model; the environment's action
/// kind follows the model.
pub fn evaluate(
    model: &Model,
    config: &EnvConfig,
    scenario: Arc<Scenario>,
    runs: usize,
    seed: u64,
) -> Result<Vec<EpisodeOutcome>> {
    let mut config = config.clone();
    config.action_kind = model.action_kind();
    run_episodes(&config, scenario, runs, seed, |obs| model.act(obs))
}
