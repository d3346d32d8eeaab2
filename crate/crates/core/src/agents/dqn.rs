//! Deep Q-learning over a discrete action grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::log::{LogRow, TrainingLog};
use super::mlp::{Architecture, Mlp};
use super::optim::Momentum;
use super::replay::{ReplayBuffer, Transition};
use crate::dynamics::ActionGrid;
use crate::envs::Env;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub clip_norm: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the run over which epsilon decays linearly.
    pub epsilon_fraction: f64,
    /// Environment steps between hard target-network copies.
    pub target_update: usize,
    /// Environment steps collected before the first update.
    pub learning_starts: usize,
    /// Environment steps between gradient updates.
    pub train_every: usize,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            hidden: vec![128, 128],
            gamma: 0.99,
            buffer_capacity: 50_000,
            batch_size: 64,
            lr: 5e-4,
            momentum: 0.9,
            clip_norm: 10.0,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_fraction: 0.3,
            target_update: 1000,
            learning_starts: 1000,
            train_every: 4,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.gamma)
            && self.buffer_capacity >= self.batch_size
            && self.batch_size > 0
            && self.lr > 0.0
            && self.target_update > 0
            && self.train_every > 0
            && (0.0..=1.0).contains(&self.epsilon_start)
            && (0.0..=1.0).contains(&self.epsilon_end)
            && self.epsilon_fraction >= 0.0;
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid DQN config {self:?}")));
        }
        Ok(())
    }

    /// Linearly decayed exploration rate after `step` of `total` steps.
    pub fn epsilon(&self, step: usize, total: usize) -> f64 {
        let horizon = self.epsilon_fraction * total as f64;
        if horizon <= 0.0 {
            return self.epsilon_end;
        }
        let t = step as f64 / horizon;
        if t >= 1.0 {
            return self.epsilon_end;
        }
        self.epsilon_start + t * (self.epsilon_end - self.epsilon_start)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DqnModel {
    pub q: Mlp,
    pub grid: ActionGrid,
}

impl DqnModel {
    pub fn greedy(&self, obs: &[f64]) -> Result<usize> {
        Ok(argmax(&self.q.forward(obs)?))
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Regression target for one transition.
pub fn td_target(reward: f64, done: bool, gamma: f64, next_q_max: f64) -> f64 {
    if done {
        reward
    } else {
        reward + gamma * next_q_max
    }
}

/// One gradient step on a sampled minibatch; returns the mean squared TD error.
pub fn dqn_update(
    q: &mut Mlp,
    target: &Mlp,
    opt: &mut Momentum,
    batch: &[&Transition],
    gamma: f64,
) -> Result<f64> {
    let mut grad = vec![0.0; q.num_params()];
    let mut loss = 0.0;
    let n_actions = q.architecture().output;
    let scale = 2.0 / batch.len() as f64;
    for t in batch {
        let next = if t.done {
            0.0
        } else {
            target.forward(&t.next_state)?.into_iter().fold(f64::NEG_INFINITY, f64::max)
        };
        let y = td_target(t.reward, t.done, gamma, next);
        let acts = q.activations(&t.state)?;
        let err = acts.output()[t.action] - y;
        loss += err * err;
        let mut up = vec![0.0; n_actions];
        up[t.action] = scale * err;
        q.backward(&acts, &up, &mut grad)?;
    }
    let mut params = q.params().to_vec();
    opt.step(&mut params, &mut grad);
    q.set_params(&params)?;
    q.snap_to_f32();
    if !q.is_finite() {
        return Err(Error::NumericalFailure("Q-network diverged".into()));
    }
    Ok(loss / batch.len() as f64)
}

/// Trains for `iterations` environment steps.
pub fn dqn_train<E: Env>(
    env: &mut E,
    cfg: &DqnConfig,
    iterations: usize,
    seed: u64,
) -> Result<(DqnModel, TrainingLog)> {
    cfg.validate()?;
    let grid = env
        .action_grid()
        .cloned()
        .ok_or_else(|| Error::InvalidArgument("DQN needs an environment with a grid action kind".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arch = Architecture::new(env.observation_dim(), &cfg.hidden, grid.len());
    let mut q = Mlp::init(arch, &mut rng, 1.0)?;
    let mut target = q.clone();
    let mut opt = Momentum::new(cfg.lr, cfg.momentum, cfg.clip_norm);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity)?;
    let mut log = TrainingLog::default();

    let mut obs = env.reset(rng.random())?;
    let mut episode_return = 0.0;
    let mut loss = f64::NAN;
    for step in 0..iterations {
        let eps = cfg.epsilon(step, iterations);
        let action = if rng.random::<f64>() < eps {
            rng.random_range(0..grid.len())
        } else {
            argmax(&q.forward(&obs)?)
        };
        let res = env.step(grid.discretize(action)?)?;
        episode_return += res.reward;
        buffer.push(Transition {
            state: std::mem::take(&mut obs),
            action,
            reward: res.reward,
            next_state: res.observation.clone(),
            done: res.terminated,
        });
        obs = res.observation.clone();
        if res.done() {
            log.rows.push(LogRow {
                iteration: step + 1,
                episode_return,
                loss_or_surrogate: loss,
                kl: None,
                epsilon_or_std: eps,
            });
            episode_return = 0.0;
            obs = env.reset(rng.random())?;
        }
        if step + 1 >= cfg.learning_starts
            && buffer.len() >= cfg.batch_size
            && (step + 1) % cfg.train_every == 0
        {
            let batch = buffer.sample(cfg.batch_size, &mut rng)?;
            loss = dqn_update(&mut q, &target, &mut opt, &batch, cfg.gamma)?;
        }
        if (step + 1) % cfg.target_update == 0 {
            target = q.clone();
        }
    }
    Ok((DqnModel { q, grid }, log))
}
