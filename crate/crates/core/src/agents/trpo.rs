//! Trust region policy optimization with a Gaussian policy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::log::{LogRow, TrainingLog};
use super::mlp::{Activations, Architecture, Mlp};
use super::optim::Momentum;
use super::policy::{gaussian_kl, GaussianPolicy, ACTION_DIM};
use crate::envs::Env;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrpoConfig {
    pub hidden: Vec<usize>,
    pub value_hidden: Vec<usize>,
    pub gamma: f64,
    pub lambda: f64,
    pub max_kl: f64,
    /// Environment steps per policy update.
    pub batch_steps: usize,
    pub cg_iterations: usize,
    pub cg_damping: f64,
    pub backtrack_factor: f64,
    pub backtrack_steps: usize,
    pub init_log_std: f64,
    pub value_lr: f64,
    pub value_epochs: usize,
    pub value_minibatch: usize,
}

impl Default for TrpoConfig {
    fn default() -> Self {
        TrpoConfig {
            hidden: vec![64, 64],
            value_hidden: vec![64, 64],
            gamma: 0.99,
            lambda: 0.95,
            max_kl: 0.01,
            batch_steps: 4096,
            cg_iterations: 10,
            cg_damping: 0.1,
            backtrack_factor: 0.8,
            backtrack_steps: 10,
            init_log_std: 0.0,
            value_lr: 1e-2,
            value_epochs: 5,
            value_minibatch: 64,
        }
    }
}

impl TrpoConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gamma >= 0.0
            && self.gamma <= 1.0
            && self.lambda >= 0.0
            && self.lambda <= 1.0
            && self.max_kl > 0.0
            && self.batch_steps > 0
            && self.cg_iterations > 0
            && self.cg_damping >= 0.0
            && self.backtrack_factor > 0.0
            && self.backtrack_factor < 1.0
            && self.value_minibatch > 0;
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid TRPO config {self:?}")));
        }
        Ok(())
    }
}

/// Advantages and returns of one trajectory segment.
///
/// `values` holds one more entry than `rewards`: the value of the state
/// reached after the last step (ignored when that step is terminal).
/// Propagation stops after any step flagged in `dones`.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = rewards.len();
    if values.len() != t + 1 || dones.len() != t {
        return Err(Error::ContractViolation(format!(
            "gae needs values of length T+1 and dones of length T, got T={t}, {} values, {} dones",
            values.len(),
            dones.len()
        )));
    }
    let mut adv = vec![0.0; t];
    let mut running = 0.0;
    for i in (0..t).rev() {
        let mask = if dones[i] { 0.0 } else { 1.0 };
        let delta = rewards[i] + gamma * values[i + 1] * mask - values[i];
        running = delta + gamma * lambda * mask * running;
        adv[i] = running;
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, ret))
}

/// Conjugate gradient solve of `A x = b` for a symmetric positive-definite
/// operator.
pub fn conjugate_gradient<F>(mut op: F, b: &[f64], iterations: usize, tolerance: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut p = b.to_vec();
    let mut rr = dot(&r, &r);
    for _ in 0..iterations {
        if rr.sqrt() <= tolerance {
            break;
        }
        let ap = op(&p)?;
        let pap = dot(&p, &ap);
        let alpha = rr / pap;
        if !alpha.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "conjugate gradient step is not finite (pAp = {pap})"
            )));
        }
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if !rr_new.is_finite() {
            return Err(Error::NumericalFailure("conjugate gradient residual is not finite".into()));
        }
        let beta = rr_new / rr;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Ok(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Contiguous run of steps from one episode; `bootstrap` is the value of
/// the state after the last step (0 when it terminated).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub bootstrap: f64,
    pub terminated: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBatch {
    pub observations: Vec<Vec<f64>>,
    /// Pre-squash action samples.
    pub actions: Vec<[f64; ACTION_DIM]>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub segments: Vec<Segment>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    /// Fills advantages and returns segment by segment, then normalizes the
    /// advantages to zero mean and unit standard deviation.
    pub fn compute_advantages(&mut self, gamma: f64, lambda: f64) -> Result<()> {
        self.advantages = vec![0.0; self.len()];
        self.returns = vec![0.0; self.len()];
        for seg in &self.segments {
            let mut values = self.values[seg.start..seg.end].to_vec();
            values.push(if seg.terminated { 0.0 } else { seg.bootstrap });
            let mut dones = vec![false; seg.end - seg.start];
            if let Some(last) = dones.last_mut() {
                *last = seg.terminated;
            }
            let (a, r) = gae(&self.rewards[seg.start..seg.end], &values, &dones, gamma, lambda)?;
            self.advantages[seg.start..seg.end].copy_from_slice(&a);
            self.returns[seg.start..seg.end].copy_from_slice(&r);
        }
        normalize(&mut self.advantages);
        Ok(())
    }
}

/// Zero mean, unit standard deviation (left untouched for fewer than two values).
pub fn normalize(v: &mut [f64]) {
    if v.len() < 2 {
        return;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt() + 1e-8;
    v.iter_mut().for_each(|x| *x = (*x - mean) / std);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrpoDiagnostics {
    pub accepted: bool,
    pub surrogate_before: f64,
    pub surrogate_after: f64,
    /// Measured KL(old ‖ new); 0 when rejected.
    pub kl: f64,
    /// Number of step halvings tried before acceptance.
    pub backtracks: usize,
    pub gradient_norm: f64,
}

/// Policy quantities at the old parameters, shared by every evaluation
/// within one update.
struct OldPolicy {
    acts: Vec<Activations>,
    means: Vec<[f64; ACTION_DIM]>,
    log_std: [f64; ACTION_DIM],
}

impl OldPolicy {
    fn new(policy: &GaussianPolicy, observations: &[Vec<f64>]) -> Result<Self> {
        let acts = observations
            .iter()
            .map(|o| policy.activations(o))
            .collect::<Result<Vec<_>>>()?;
        let means = acts
            .iter()
            .map(|a| {
                let o = a.output();
                [o[0], o[1]]
            })
            .collect();
        Ok(OldPolicy {
            acts,
            means,
            log_std: policy.log_std(),
        })
    }
}

/// Fisher information of the policy times `v`, averaged over states:
/// `Jᵀ Σ⁻¹ J v` for the mean network and `2 v` for the log standard
/// deviations.
pub fn fisher_vector_product(
    policy: &GaussianPolicy,
    observations: &[Vec<f64>],
    v: &[f64],
) -> Result<Vec<f64>> {
    let old = OldPolicy::new(policy, observations)?;
    fvp(policy, &old, v)
}

fn fvp(policy: &GaussianPolicy, old: &OldPolicy, v: &[f64]) -> Result<Vec<f64>> {
    let n = policy.mean.num_params();
    if v.len() != n + ACTION_DIM {
        return Err(Error::ContractViolation("Fisher vector has the wrong length".into()));
    }
    let inv_var = old.log_std.map(|l| (-2.0 * l).exp());
    let mut out = vec![0.0; n + ACTION_DIM];
    for acts in &old.acts {
        let jv = policy.mean.jvp(acts, &v[..n])?;
        let w = [jv[0] * inv_var[0], jv[1] * inv_var[1]];
        policy.mean.backward(acts, &w, &mut out[..n])?;
    }
    let count = old.acts.len().max(1) as f64;
    out[..n].iter_mut().for_each(|x| *x /= count);
    for k in 0..ACTION_DIM {
        out[n + k] = 2.0 * v[n + k];
    }
    Ok(out)
}

/// Mean KL(old ‖ candidate) over the batch states.
fn mean_kl(candidate: &GaussianPolicy, old: &OldPolicy, observations: &[Vec<f64>]) -> Result<f64> {
    let ls = candidate.log_std();
    let mut total = 0.0;
    for (obs, m_old) in observations.iter().zip(&old.means) {
        total += gaussian_kl(m_old, &old.log_std, &candidate.mean_u(obs)?, &ls);
    }
    Ok(total / observations.len().max(1) as f64)
}

/// Gradient of the mean KL(old ‖ policy) with respect to the policy's parameters.
pub fn kl_gradient(
    policy: &GaussianPolicy,
    old_means: &[[f64; ACTION_DIM]],
    old_log_std: &[f64; ACTION_DIM],
    observations: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let n = policy.mean.num_params();
    let ls = policy.log_std();
    let var = ls.map(|l| (2.0 * l).exp());
    let var_old = old_log_std.map(|l| (2.0 * l).exp());
    let mut g = vec![0.0; n + ACTION_DIM];
    for (obs, m_old) in observations.iter().zip(old_means) {
        let acts = policy.activations(obs)?;
        let m = acts.output();
        let up = [(m[0] - m_old[0]) / var[0], (m[1] - m_old[1]) / var[1]];
        policy.mean.backward(&acts, &up, &mut g[..n])?;
        for k in 0..ACTION_DIM {
            let dm = m[k] - m_old[k];
            g[n + k] += 1.0 - (var_old[k] + dm * dm) / var[k];
        }
    }
    let count = observations.len().max(1) as f64;
    g.iter_mut().for_each(|x| *x /= count);
    Ok(g)
}

/// Importance-weighted surrogate mean[(π/π_old)·A].
fn surrogate(candidate: &GaussianPolicy, batch: &RolloutBatch) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..batch.len() {
        let m = candidate.mean_u(&batch.observations[i])?;
        let ratio = (candidate.log_prob_u(&m, &batch.actions[i]) - batch.log_probs[i]).exp();
        total += ratio * batch.advantages[i];
    }
    Ok(total / batch.len() as f64)
}

/// Gradient of the surrogate at the old parameters (ratio 1).
fn surrogate_gradient(policy: &GaussianPolicy, old: &OldPolicy, batch: &RolloutBatch) -> Result<Vec<f64>> {
    let n = policy.mean.num_params();
    let var = old.log_std.map(|l| (2.0 * l).exp());
    let mut g = vec![0.0; n + ACTION_DIM];
    let count = batch.len() as f64;
    for i in 0..batch.len() {
        let a = batch.advantages[i] / count;
        if a == 0.0 {
            continue;
        }
        let (m, u) = (old.means[i], batch.actions[i]);
        let up = [a * (u[0] - m[0]) / var[0], a * (u[1] - m[1]) / var[1]];
        policy.mean.backward(&old.acts[i], &up, &mut g[..n])?;
        for k in 0..ACTION_DIM {
            g[n + k] += a * ((u[k] - m[k]).powi(2) / var[k] - 1.0);
        }
    }
    Ok(g)
}

/// One natural-gradient step with backtracking line search. The policy is
/// replaced only when a step improves the surrogate within 1.5·`max_kl`;
/// otherwise it is left bit-for-bit unchanged.
pub fn trpo_update(
    policy: &mut GaussianPolicy,
    batch: &RolloutBatch,
    cfg: &TrpoConfig,
) -> Result<TrpoDiagnostics> {
    if batch.is_empty() {
        return Err(Error::ContractViolation("empty rollout batch".into()));
    }
    let old = OldPolicy::new(policy, &batch.observations)?;
    let surrogate_before = surrogate(policy, batch)?;
    if !surrogate_before.is_finite() {
        return Err(Error::NumericalFailure("surrogate is not finite".into()));
    }
    let g = surrogate_gradient(policy, &old, batch)?;
    let gradient_norm = dot(&g, &g).sqrt();
    let mut diag = TrpoDiagnostics {
        accepted: false,
        surrogate_before,
        surrogate_after: surrogate_before,
        kl: 0.0,
        backtracks: 0,
        gradient_norm,
    };
    if !gradient_norm.is_finite() {
        return Err(Error::NumericalFailure("policy gradient is not finite".into()));
    }
    if gradient_norm == 0.0 {
        return Ok(diag);
    }
    let damped = |v: &[f64]| -> Result<Vec<f64>> {
        let mut fv = fvp(policy, &old, v)?;
        for (f, x) in fv.iter_mut().zip(v) {
            *f += cfg.cg_damping * x;
        }
        Ok(fv)
    };
    let step = conjugate_gradient(damped, &g, cfg.cg_iterations, 1e-10)?;
    let shs = dot(&step, &damped(&step)?);
    if !shs.is_finite() {
        return Err(Error::NumericalFailure("step curvature is not finite".into()));
    }
    if shs <= 0.0 {
        return Ok(diag);
    }
    let scale = (2.0 * cfg.max_kl / shs).sqrt();
    let theta = policy.flat_params();
    let mut candidate = policy.clone();
    let mut fraction = 1.0;
    for k in 0..cfg.backtrack_steps {
        let params: Vec<f64> = theta
            .iter()
            .zip(&step)
            .map(|(t, s)| t + fraction * scale * s)
            .collect();
        candidate.set_flat_params(&params)?;
        candidate.snap_to_f32();
        let after = surrogate(&candidate, batch)?;
        if !after.is_finite() {
            return Err(Error::NumericalFailure("surrogate is not finite".into()));
        }
        let kl = mean_kl(&candidate, &old, &batch.observations)?;
        if after > surrogate_before && kl <= 1.5 * cfg.max_kl && candidate.is_finite() {
            *policy = candidate;
            diag.accepted = true;
            diag.surrogate_after = after;
            diag.kl = kl;
            diag.backtracks = k;
            return Ok(diag);
        }
        fraction *= cfg.backtrack_factor;
    }
    diag.backtracks = cfg.backtrack_steps;
    Ok(diag)
}

/// Regresses the value network on `targets` with minibatch momentum descent.
/// Returns the mean squared error of the last epoch.
pub fn fit_value<R: Rng>(
    value: &mut Mlp,
    opt: &mut Momentum,
    observations: &[Vec<f64>],
    targets: &[f64],
    epochs: usize,
    minibatch: usize,
    rng: &mut R,
) -> Result<f64> {
    let mut order: Vec<usize> = (0..observations.len()).collect();
    let mut params = value.params().to_vec();
    let mut grad = vec![0.0; params.len()];
    let mut last = 0.0;
    for _ in 0..epochs {
        order.shuffle(rng);
        let mut sum = 0.0;
        for chunk in order.chunks(minibatch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 2.0 / chunk.len() as f64;
            for &i in chunk {
                let acts = value.activations(&observations[i])?;
                let err = acts.output()[0] - targets[i];
                sum += err * err;
                value.backward(&acts, &[scale * err], &mut grad)?;
            }
            opt.step(&mut params, &mut grad);
            value.set_params(&params)?;
            value.snap_to_f32();
            params.copy_from_slice(value.params());
        }
        last = sum / observations.len().max(1) as f64;
    }
    if !value.is_finite() {
        return Err(Error::NumericalFailure("value network diverged".into()));
    }
    Ok(last)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrpoModel {
    pub policy: GaussianPolicy,
    pub value: Mlp,
}

/// Trains for `iterations` environment steps.
pub fn trpo_train<E: Env>(
    env: &mut E,
    cfg: &TrpoConfig,
    iterations: usize,
    seed: u64,
) -> Result<(TrpoModel, TrainingLog)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = env.observation_dim();
    let mut policy = GaussianPolicy::init(dim, &cfg.hidden, cfg.init_log_std, &mut rng)?;
    let mut value = Mlp::init(Architecture::new(dim, &cfg.value_hidden, 1), &mut rng, 1.0)?;
    let mut value_opt = Momentum::new(cfg.value_lr, 0.9, 10.0);
    let mut log = TrainingLog::default();

    let mut obs = env.reset(rng.random())?;
    let mut episode_return = 0.0;
    let mut last = (f64::NAN, f64::NAN);
    let mut step = 0;
    while step < iterations {
        let steps = cfg.batch_steps.min(iterations - step);
        let mut batch = RolloutBatch::default();
        let mut seg_start = 0;
        for t in 0..steps {
            let mean = policy.mean_u(&obs)?;
            let (u, action) = policy.sample(&obs, &mut rng)?;
            let v = value.forward(&obs)?[0];
            let res = env.step(action)?;
            step += 1;
            episode_return += res.reward;
            batch.observations.push(std::mem::replace(&mut obs, res.observation.clone()));
            batch.actions.push(u);
            batch.rewards.push(res.reward);
            batch.values.push(v);
            batch.log_probs.push(policy.log_prob_u(&mean, &u));
            let cut = t + 1 == steps;
            if res.done() || cut {
                let bootstrap = if res.terminated { 0.0 } else { value.forward(&res.observation)?[0] };
                batch.segments.push(Segment {
                    start: seg_start,
                    end: t + 1,
                    bootstrap,
                    terminated: res.terminated,
                });
                seg_start = t + 1;
            }
            if res.done() {
                let std = policy.std();
                log.rows.push(LogRow {
                    iteration: step,
                    episode_return,
                    loss_or_surrogate: last.0,
                    kl: Some(last.1),
                    epsilon_or_std: (std[0] + std[1]) / 2.0,
                });
                episode_return = 0.0;
                obs = env.reset(rng.random())?;
            }
        }
        batch.compute_advantages(cfg.gamma, cfg.lambda)?;
        let diag = trpo_update(&mut policy, &batch, cfg)?;
        last = (diag.surrogate_after, diag.kl);
        fit_value(
            &mut value,
            &mut value_opt,
            &batch.observations,
            &batch.returns,
            cfg.value_epochs,
            cfg.value_minibatch,
            &mut rng,
        )?;
    }
    Ok((TrpoModel { policy, value }, log))
}
