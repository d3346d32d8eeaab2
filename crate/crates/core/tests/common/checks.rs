//! Acceptance checks shared by the integration tests and the acceptance
//! runner. Each returns a short summary on success and the first violation
//! otherwise.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use drlc_core::agents::{
    conjugate_gradient, gae, trpo_update, Architecture, GaussianPolicy, Mlp, RolloutBatch,
    Segment, TrpoConfig,
};
use drlc_core::dynamics::{bicycle_step, Action, VehicleState, DEFAULT_LENGTH};
use drlc_core::envs::{modified_reward, scenario, EnvConfig, Environment, ScenarioName, SpawnMode};
use drlc_core::geom::Vec2;
use drlc_core::metrics::step_jerk;
use drlc_core::roadnet::{lane_heading_difference, lane_relation, ComponentKind, Lane, LanePoint, LaneRelation, RoadNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

pub type Check = std::result::Result<String, String>;

fn relation(d: f64, lhd: f64) -> LaneRelation {
    LaneRelation {
        lane_id: drlc_core::roadnet::LaneId(0),
        closest_point: LanePoint {
            position: Vec2::ZERO,
            heading: 0.0,
            arc_length: 0.0,
        },
        signed_distance: d,
        lhd,
        onlane: d.abs() <= 2.0,
    }
}

fn car(v: f64, crashed: bool) -> VehicleState {
    let mut c = VehicleState::new(Vec2::ZERO, 0.0, v);
    c.crashed = crashed;
    c
}

pub fn reward_exactness() -> Check {
    let ideal = modified_reward(&car(20.0, false), &relation(0.0, 0.0));
    if ideal != 1.0 {
        return Err(format!("ideal state gives {ideal}"));
    }
    if modified_reward(&car(20.0, true), &relation(0.0, 0.0)) != -10.0 {
        return Err("crash does not give -10".into());
    }
    if modified_reward(&car(-1.0, false), &relation(0.5, 0.3)) != 0.0 {
        return Err("reversing does not give 0".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let v = rng.random_range(-5.0..40.0);
        let crashed = rng.random_bool(0.1);
        let lhd = rng.random_range(-PI..PI);
        let d = rng.random_range(-15.0..15.0);
        let got = modified_reward(&car(v, crashed), &relation(d, lhd));
        let want = effective_speed_reward(crashed, v, lhd, d);
        worst = worst.max((got - want).abs());
    }
    if worst > 1e-12 {
        return Err(format!("max deviation {worst:e} over 1000 random states"));
    }
    Ok(format!("1000 random states, max deviation {worst:e}"))
}

pub fn jerk_exactness() -> Check {
    let j = step_jerk(Action::new(0.0, 5.0), Action::new(0.0, -5.0));
    if j.accel != 1.0 || j.total != 0.5 {
        return Err(format!("acceleration flip gives {j:?}"));
    }
    let j = step_jerk(Action::new(-FRAC_PI_2, 0.0), Action::new(FRAC_PI_2, 0.0));
    if j.steer != 1.0 || j.total != 0.5 {
        return Err(format!("steering flip gives {j:?}"));
    }
    let j = step_jerk(Action::new(0.3, 1.2), Action::new(0.3, 1.2));
    if j.accel != 0.0 || j.steer != 0.0 || j.total != 0.0 {
        return Err(format!("constant action gives {j:?}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut peak = 0.0f64;
    for _ in 0..10_000 {
        let prev = (rng.random_range(-FRAC_PI_2..=FRAC_PI_2), rng.random_range(-5.0..=5.0));
        let cur = (rng.random_range(-FRAC_PI_2..=FRAC_PI_2), rng.random_range(-5.0..=5.0));
        let j = step_jerk(Action::new(prev.0, prev.1), Action::new(cur.0, cur.1));
        let (ja, js, jt) = jerk_oracle(prev, cur);
        if (j.accel - ja).abs() > 1e-15 || (j.steer - js).abs() > 1e-15 || (j.total - jt).abs() > 1e-15 {
            return Err(format!("{prev:?} -> {cur:?}: {j:?} vs ({ja}, {js}, {jt})"));
        }
        peak = peak.max(j.total.abs());
    }
    if peak > 1.0 {
        return Err(format!("per-step |j_total| reached {peak}"));
    }
    Ok(format!("10000 random pairs, max |j_total| {peak:.4}"))
}

pub fn closest_point_oracle(queries: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let per_net = 50;
    for k in 0..queries.div_ceil(per_net) {
        let net = random_network(&mut rng, 20);
        for _ in 0..per_net.min(queries - k * per_net) {
            let p = Vec2::new(rng.random_range(-130.0..130.0), rng.random_range(-130.0..130.0));
            let got = net.closest_lane_point(p).map_err(|e| e.to_string())?;
            let (_, want) = dense_closest(net.lanes(), p, 0.01);
            worst = worst.max((got.projection.distance - want).abs());
        }
    }
    if worst > 0.02 {
        return Err(format!("max deviation {worst} m"));
    }
    Ok(format!("{queries} queries, max deviation {worst:.2e} m"))
}

pub fn lhd_grid() -> Check {
    let angle = |i: usize| (-PI + (i as f64 + 1.0) * (2.0 * PI / 360.0)).min(PI);
    for i in 0..360 {
        for j in 0..360 {
            let (l, c) = (angle(i), angle(j));
            let got = lane_heading_difference(l, c).map_err(|e| e.to_string())?;
            if got != lhd_table(l, c) {
                return Err(format!("l={l} c={c}: {got} vs {}", lhd_table(l, c)));
            }
        }
    }
    Ok("360x360 grid exact".into())
}

/// One zero-steering step from random off-road states with |LHD| < π/2.
pub fn sign_product() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    while checked < 1000 {
        let start = Vec2::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
        let dir = rng.random_range(-PI..PI);
        let lane = Lane::straight(0, start, start + Vec2::from_angle(dir) * 400.0, 4.0, 20.0);
        let net = RoadNetwork::new(vec![lane], Default::default(), vec![]).map_err(|e| e.to_string())?;
        let along = rng.random_range(100.0..300.0);
        let off = rng.random_range(2.1..20.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let p = start + Vec2::from_angle(dir) * along + Vec2::from_angle(dir + FRAC_PI_2) * off;
        let heading = drlc_core::geom::normalize_angle(dir + rng.random_range(-1.5..1.5));
        let speed = rng.random_range(1.0..40.0);
        let accel = rng.random_range(-5.0..5.0);
        let s0 = VehicleState::new(p, heading, speed);
        let r0 = lane_relation(&net, &s0, drlc_core::roadnet::LaneId(0)).map_err(|e| e.to_string())?;
        if r0.onlane || r0.lhd.abs() >= FRAC_PI_2 || r0.lhd == 0.0 {
            continue;
        }
        let s1 = bicycle_step(&s0, Action::new(0.0, accel), 1.0 / 15.0).map_err(|e| e.to_string())?;
        let r1 = lane_relation(&net, &s1, drlc_core::roadnet::LaneId(0)).map_err(|e| e.to_string())?;
        let product = r0.lhd.signum() * r0.signed_distance.signum();
        let closer = r1.signed_distance.abs() < r0.signed_distance.abs();
        let farther = r1.signed_distance.abs() > r0.signed_distance.abs();
        if (product < 0.0 && !closer) || (product > 0.0 && !farther) {
            return Err(format!(
                "d {} -> {}, LHD {} (product {product})",
                r0.signed_distance, r1.signed_distance, r0.lhd
            ));
        }
        checked += 1;
    }
    Ok("1000 off-road states, 0 violations".into())
}

/// Closed-form steady-state radius of the kinematic bicycle with the
/// reference point midway between the axles.
pub fn kinematic_radius(steering: f64, front: f64, rear: f64) -> f64 {
    let beta = (rear / (front + rear) * steering.tan()).atan();
    rear / beta.sin().abs()
}

pub fn bicycle_circle() -> Check {
    let mut report = Vec::new();
    for (steering, speed) in [(0.1, 10.0), (0.3, 5.0), (-0.6, 8.0), (1.2, 3.0)] {
        let want = kinematic_radius(steering, DEFAULT_LENGTH / 2.0, DEFAULT_LENGTH / 2.0);
        let mut s = VehicleState::new(Vec2::new(3.0, -7.0), 0.4, speed);
        let mut points = vec![s.position];
        let mut turned = 0.0;
        let mut prev = s.heading;
        while turned < 2.0 * PI {
            s = bicycle_step(&s, Action::new(steering, 0.0), 1.0 / 15.0).map_err(|e| e.to_string())?;
            turned += drlc_core::geom::normalize_angle(s.heading - prev).abs();
            prev = s.heading;
            points.push(s.position);
        }
        let (_, got) = fit_circle(&points);
        let err = rel_err(got, want);
        if err > 0.01 {
            return Err(format!("steering {steering}: radius {got} vs {want}"));
        }
        report.push(format!("{err:.1e}"));
    }
    Ok(format!("relative radius errors {}", report.join(", ")))
}

/// Central finite differences of one output component's weighted sum.
pub fn gradient_fidelity() -> Check {
    let archs = [
        Architecture::new(3, &[5], 2),
        Architecture::new(4, &[6, 5], 3),
        Architecture::new(2, &[3, 4, 3], 1),
    ];
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut count = 0;
    for arch in &archs {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let net = Mlp::init(arch.clone(), &mut rng, 1.0).map_err(|e| e.to_string())?;
            let x: Vec<f64> = (0..arch.input).map(|_| rng.random_range(-1.0..1.0)).collect();
            let up: Vec<f64> = (0..arch.output).map(|_| rng.random_range(-1.0..1.0)).collect();
            let grad = net.gradient(&x, &up).map_err(|e| e.to_string())?;
            let sizes = arch.sizes();
            let f = |p: &[f64]| -> f64 {
                mlp_scalar(&sizes, p, &x).iter().zip(&up).map(|(o, u)| o * u).sum()
            };
            let mut p = net.params().to_vec();
            for i in 0..p.len() {
                let orig = p[i];
                p[i] = orig + h;
                let plus = f(&p);
                p[i] = orig - h;
                let minus = f(&p);
                p[i] = orig;
                let fd = (plus - minus) / (2.0 * h);
                let err = if fd.abs().max(grad[i].abs()) < 1e-6 {
                    (fd - grad[i]).abs()
                } else {
                    rel_err(grad[i], fd)
                };
                if err > 1e-4 {
                    return Err(format!("{arch:?} seed {seed} param {i}: {} vs {fd}", grad[i]));
                }
                worst = worst.max(err);
                count += 1;
            }
        }
    }
    Ok(format!("{count} parameters over 3 architectures x 5 seeds, max rel error {worst:.1e}"))
}

pub fn cg_vs_dense() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let a = random_spd(&mut rng, 20);
        let b: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let want = dense_solve(&a, &b);
        let got = conjugate_gradient(|v| Ok(mat_vec(&a, v)), &b, 100, 1e-14).map_err(|e| e.to_string())?;
        let num: f64 = got.iter().zip(&want).map(|(g, w)| (g - w).powi(2)).sum::<f64>().sqrt();
        let den: f64 = want.iter().map(|w| w * w).sum::<f64>().sqrt();
        worst = worst.max(num / den);
    }
    if worst > 1e-6 {
        return Err(format!("max relative error {worst:e}"));
    }
    Ok(format!("20 systems, max relative error {worst:.1e}"))
}

pub fn gae_vs_brute_force() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let n = if trial == 0 { 50 } else { rng.random_range(1..=200) };
        let rewards: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
        let values: Vec<f64> = (0..=n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let dones: Vec<bool> = (0..n).map(|_| rng.random_bool(0.05)).collect();
        let (adv, ret) = gae(&rewards, &values, &dones, 0.99, 0.95).map_err(|e| e.to_string())?;
        let want = gae_brute(&rewards, &values, &dones, 0.99, 0.95);
        for t in 0..n {
            worst = worst.max((adv[t] - want[t]).abs());
            if (ret[t] - (adv[t] + values[t])).abs() > 1e-12 {
                return Err(format!("return {t} is not advantage + value"));
            }
        }
    }
    if worst > 1e-10 {
        return Err(format!("max deviation {worst:e}"));
    }
    Ok(format!("50 trajectories up to 200 steps, max deviation {worst:.1e}"))
}

/// Mean diagonal-Gaussian KL(old ‖ new) written out term by term.
fn measured_kl(old: &GaussianPolicy, new: &GaussianPolicy, obs: &[Vec<f64>]) -> f64 {
    let (ls0, ls1) = (old.log_std(), new.log_std());
    let mut total = 0.0;
    for o in obs {
        let (m0, m1) = (old.mean_u(o).unwrap(), new.mean_u(o).unwrap());
        for k in 0..2 {
            let (s0, s1) = (ls0[k].exp(), ls1[k].exp());
            total += (s1 / s0).ln() + (s0 * s0 + (m0[k] - m1[k]).powi(2)) / (2.0 * s1 * s1) - 0.5;
        }
    }
    total / obs.len() as f64
}

pub fn random_batch(policy: &GaussianPolicy, rng: &mut ChaCha8Rng, n: usize, dim: usize) -> RolloutBatch {
    let mut batch = RolloutBatch::default();
    for _ in 0..n {
        let obs: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = policy.mean_u(&obs).unwrap();
        let (u, _) = policy.sample(&obs, rng).unwrap();
        batch.log_probs.push(policy.log_prob_u(&mean, &u));
        batch.actions.push(u);
        batch.observations.push(obs);
        batch.advantages.push(rng.random_range(-1.0..1.0));
    }
    batch.rewards = vec![0.0; n];
    batch.values = vec![0.0; n];
    batch.returns = vec![0.0; n];
    batch.segments = vec![Segment {
        start: 0,
        end: n,
        bootstrap: 0.0,
        terminated: true,
    }];
    drlc_core::agents::normalize(&mut batch.advantages);
    batch
}

/// Accepted updates respect the trust region; rejected ones change nothing.
pub fn trust_region() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut accepted, mut rejected, mut worst) = (0, 0, 0.0f64);
    let mut trial = 0;
    while accepted < 100 || rejected < 20 {
        trial += 1;
        if trial > 2000 {
            return Err(format!("only {accepted} accepted / {rejected} rejected updates in 2000 trials"));
        }
        let dim = 4;
        let mut policy = GaussianPolicy::init(dim, &[8], rng.random_range(-1.0..0.5), &mut rng)
            .map_err(|e| e.to_string())?;
        let batch = random_batch(&policy, &mut rng, 64, dim);
        let mut cfg = TrpoConfig::default();
        cfg.max_kl = 10f64.powf(rng.random_range(-3.0..0.0));
        // Short line searches on some trials so rejections occur too.
        cfg.backtrack_steps = if trial % 3 == 0 { rng.random_range(0..2) } else { 10 };
        let before = policy.clone();
        let bits = |p: &GaussianPolicy| p.flat_params().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        let diag = trpo_update(&mut policy, &batch, &cfg).map_err(|e| e.to_string())?;
        if diag.accepted {
            let kl = measured_kl(&before, &policy, &batch.observations);
            if kl > 1.5 * cfg.max_kl {
                return Err(format!("accepted step with KL {kl} > 1.5 x {}", cfg.max_kl));
            }
            worst = worst.max(kl / cfg.max_kl);
            accepted += 1;
        } else {
            if bits(&before) != bits(&policy) {
                return Err("rejected line search modified the policy".into());
            }
            rejected += 1;
        }
    }
    Ok(format!(
        "{accepted}/{accepted} accepted within 1.5 delta (max KL/delta {worst:.3}), {rejected} rejections bitwise unchanged"
    ))
}

pub fn complexroads_structure(resets: usize) -> Check {
    let sc = scenario(ScenarioName::Complexroads).map_err(|e| e.to_string())?;
    let count = |k: ComponentKind| sc.network.components().iter().filter(|c| c.kind == k).count();
    let (merges, inters, rounds, straights) = (
        count(ComponentKind::Merge),
        count(ComponentKind::Intersection),
        count(ComponentKind::Roundabout),
        count(ComponentKind::StraightConnector),
    );
    if merges != 2 || inters != 2 || rounds != 2 || straights < 4 {
        return Err(format!(
            "{merges} merges, {inters} intersections, {rounds} roundabouts, {straights} straight connectors"
        ));
    }
    for c in sc.network.components().iter().filter(|c| c.kind == ComponentKind::StraightConnector) {
        if c.lanes.len() < 2 {
            return Err(format!("straight connector with {} lane(s)", c.lanes.len()));
        }
    }
    if !sc.network.is_strongly_connected() {
        return Err("successor graph is not strongly connected".into());
    }
    let spawnable: BTreeSet<_> = sc.spawnable_lanes().into_iter().collect();
    let mut cfg = EnvConfig::new(ScenarioName::Complexroads);
    cfg.spawn = SpawnMode::Randomized;
    let mut env = Environment::with_scenario(cfg, Arc::new(sc)).map_err(|e| e.to_string())?;
    let mut seen = BTreeSet::new();
    for seed in 0..resets as u64 {
        env.reset_seed(seed).map_err(|e| e.to_string())?;
        seen.insert(env.relation().lane_id);
    }
    if seen != spawnable {
        let missing: Vec<_> = spawnable.difference(&seen).collect();
        return Err(format!("{} of {} spawnable lanes never used: {missing:?}", missing.len(), spawnable.len()));
    }
    Ok(format!(
        "2 merges, 2 intersections, 2 roundabouts, {straights} straight connectors, strongly connected, {resets} resets cover all {} spawnable lanes",
        spawnable.len()
    ))
}
