//! Tanh-squashed diagonal Gaussian policy over (steering, acceleration).

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::mlp::{Activations, Architecture, Mlp};
use crate::dynamics::{Action, MAX_ACCELERATION, MAX_STEERING};
use crate::{Error, Result};

pub const ACTION_DIM: usize = 2;
/// Physical half-range of each action component.
pub const ACTION_BOUNDS: [f64; ACTION_DIM] = [MAX_STEERING, MAX_ACCELERATION];
pub const MIN_STD: f64 = 1e-3;
pub const MAX_STD: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub mean: Mlp,
    log_std: [f64; ACTION_DIM],
}

impl GaussianPolicy {
    pub fn new(mean: Mlp, log_std: [f64; ACTION_DIM]) -> Result<Self> {
        if mean.architecture().output != ACTION_DIM {
            return Err(Error::ArchitectureMismatch(format!(
                "policy network must output {ACTION_DIM} values, has {}",
                mean.architecture().output
            )));
        }
        let mut p = GaussianPolicy { mean, log_std };
        p.clamp_log_std();
        Ok(p)
    }

    /// Small random mean network so the initial mean action is near zero.
    pub fn init<R: Rng>(input: usize, hidden: &[usize], log_std: f64, rng: &mut R) -> Result<Self> {
        let mean = Mlp::init(Architecture::new(input, hidden, ACTION_DIM), rng, 0.01)?;
        let mut p = GaussianPolicy::new(mean, [log_std; ACTION_DIM])?;
        p.snap_to_f32();
        Ok(p)
    }

    pub fn log_std(&self) -> [f64; ACTION_DIM] {
        self.log_std
    }

    pub fn std(&self) -> [f64; ACTION_DIM] {
        self.log_std.map(f64::exp)
    }

    fn clamp_log_std(&mut self) {
        for l in &mut self.log_std {
            *l = l.clamp(MIN_STD.ln(), MAX_STD.ln());
        }
    }

    pub fn snap_to_f32(&mut self) {
        self.mean.snap_to_f32();
        for l in &mut self.log_std {
            *l = *l as f32 as f64;
        }
    }

    pub fn num_params(&self) -> usize {
        self.mean.num_params() + ACTION_DIM
    }

    /// Mean-network parameters followed by the log standard deviations.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut p = self.mean.params().to_vec();
        p.extend(self.log_std);
        p
    }

    /// Sets all parameters; log standard deviations are clamped to the
    /// admissible range.
    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        let n = self.mean.num_params();
        if params.len() != n + ACTION_DIM {
            return Err(Error::ContractViolation("policy parameter vector has the wrong length".into()));
        }
        self.mean.set_params(&params[..n])?;
        self.log_std.copy_from_slice(&params[n..]);
        self.clamp_log_std();
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.mean.is_finite() && self.log_std.iter().all(|l| l.is_finite())
    }

    /// Pre-squash mean.
    pub fn mean_u(&self, obs: &[f64]) -> Result<[f64; ACTION_DIM]> {
        let m = self.mean.forward(obs)?;
        Ok([m[0], m[1]])
    }

    /// Deterministic action used for evaluation.
    pub fn mean_action(&self, obs: &[f64]) -> Result<Action> {
        Ok(squash(self.mean_u(obs)?))
    }

    /// Samples a pre-squash value and the action it maps to.
    pub fn sample<R: Rng>(&self, obs: &[f64], rng: &mut R) -> Result<([f64; ACTION_DIM], Action)> {
        let m = self.mean_u(obs)?;
        let s = self.std();
        let mut u = [0.0; ACTION_DIM];
        for k in 0..ACTION_DIM {
            let z: f64 = StandardNormal.sample(rng);
            u[k] = m[k] + s[k] * z;
        }
        Ok((u, squash(u)))
    }

    /// Log density of a pre-squash value.
    pub fn log_prob_u(&self, mean: &[f64; ACTION_DIM], u: &[f64; ACTION_DIM]) -> f64 {
        normal_log_density(mean, &self.log_std, u)
    }

    pub(crate) fn activations(&self, obs: &[f64]) -> Result<Activations> {
        self.mean.activations(obs)
    }
}

pub fn normal_log_density(
    mean: &[f64; ACTION_DIM],
    log_std: &[f64; ACTION_DIM],
    u: &[f64; ACTION_DIM],
) -> f64 {
    let mut lp = 0.0;
    for k in 0..ACTION_DIM {
        let z = (u[k] - mean[k]) / log_std[k].exp();
        lp += -0.5 * z * z - log_std[k] - 0.5 * (2.0 * PI).ln();
    }
    lp
}

/// Maps a pre-squash value to a physical action.
pub fn squash(u: [f64; ACTION_DIM]) -> Action {
    Action::new(
        u[0].tanh() * ACTION_BOUNDS[0],
        u[1].tanh() * ACTION_BOUNDS[1],
    )
}

/// Inverse of [`squash`], clamped just inside the bounds.
pub fn unsquash(action: Action) -> [f64; ACTION_DIM] {
    let limit = 1.0 - 1e-12;
    [action.steering, action.acceleration]
        .iter()
        .zip(ACTION_BOUNDS)
        .map(|(a, b)| (a / b).clamp(-limit, limit).atanh())
        .collect::<Vec<_>>()
        .try_into()
        .expect("two components")
}

/// Log density of a physical action: Gaussian density of the pre-squash
/// value minus the log-determinant of the squashing Jacobian.
pub fn gaussian_logprob(policy: &GaussianPolicy, obs: &[f64], action: Action) -> Result<f64> {
    let u = unsquash(action);
    let mean = policy.mean_u(obs)?;
    let correction: f64 = (0..ACTION_DIM)
        .map(|k| (ACTION_BOUNDS[k] * (1.0 - u[k].tanh().powi(2))).ln())
        .sum();
    Ok(policy.log_prob_u(&mean, &u) - correction)
}

/// KL(old ‖ new) between diagonal Gaussians.
pub fn gaussian_kl(
    old_mean: &[f64; ACTION_DIM],
    old_log_std: &[f64; ACTION_DIM],
    new_mean: &[f64; ACTION_DIM],
    new_log_std: &[f64; ACTION_DIM],
) -> f64 {
    let mut kl = 0.0;
    for k in 0..ACTION_DIM {
        let (vo, vn) = ((2.0 * old_log_std[k]).exp(), (2.0 * new_log_std[k]).exp());
        let dm = old_mean[k] - new_mean[k];
        kl += new_log_std[k] - old_log_std[k] + (vo + dm * dm) / (2.0 * vn) - 0.5;
    }
    kl
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn policy(log_std: f64) -> GaussianPolicy {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mean = Mlp::init(Architecture::new(3, &[8], 2), &mut rng, 1.0).unwrap();
        GaussianPolicy::new(mean, [log_std; 2]).unwrap()
    }

    #[test]
    fn logprob_at_the_mean_with_unit_std() {
        let p = policy(0.0);
        let obs = [0.1, -0.2, 0.3];
        let m = p.mean_u(&obs).unwrap();
        let lp = gaussian_logprob(&p, &obs, squash(m)).unwrap();
        let correction: f64 = (0..2)
            .map(|k| (ACTION_BOUNDS[k] * (1.0 - m[k].tanh().powi(2))).ln())
            .sum();
        assert!((lp - (-(2.0 * PI).ln() - correction)).abs() < 1e-9);
    }

    #[test]
    fn doubling_std_costs_two_log_two_at_the_mean() {
        let obs = [0.4, 0.0, -0.5];
        let (a, b) = (policy(0.0), policy(2f64.ln()));
        let act = a.mean_action(&obs).unwrap();
        let diff = gaussian_logprob(&a, &obs, act).unwrap() - gaussian_logprob(&b, &obs, act).unwrap();
        assert!((diff - 2.0 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn logprob_decreases_away_from_the_mean() {
        let p = policy(-0.5);
        let obs = [0.0, 0.0, 0.0];
        let m = p.mean_u(&obs).unwrap();
        let mut last = f64::INFINITY;
        for k in 0..6 {
            let u = [m[0] + 0.2 * k as f64, m[1]];
            let lp = p.log_prob_u(&m, &u);
            assert!(lp < last);
            last = lp;
        }
    }

    #[test]
    fn kl_with_itself_is_zero() {
        let m = [0.3, -1.0];
        let l = [-0.4, 0.2];
        assert_eq!(gaussian_kl(&m, &l, &m, &l), 0.0);
    }

    #[test]
    fn std_is_clamped() {
        assert!((policy(5.0).std()[0] - MAX_STD).abs() < 1e-12);
        assert!((policy(-50.0).std()[1] - MIN_STD).abs() < 1e-12);
    }

    #[test]
    fn squash_round_trip() {
        let u = [0.7, -1.3];
        let back = unsquash(squash(u));
        assert!((back[0] - u[0]).abs() < 1e-9 && (back[1] - u[1]).abs() < 1e-9);
    }
}
