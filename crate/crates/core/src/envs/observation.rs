//! Kinematic feature vector seen by the agents.

use crate::dynamics::{VehicleState, MAX_SPEED};
use crate::roadnet::LaneRelation;

/// Number of surrounding vehicles encoded.
pub const NEIGHBORS: usize = 4;
const EGO_FEATURES: usize = 5;
const NEIGHBOR_FEATURES: usize = 5;
pub const OBSERVATION_DIM: usize = EGO_FEATURES + NEIGHBOR_FEATURES * NEIGHBORS;

const DISTANCE_SCALE: f64 = 10.0;
const POSITION_SCALE: f64 = 100.0;

pub type Observation = Vec<f64>;

/// Builds the observation. `others` must be in spawn order; the nearest
/// [`NEIGHBORS`] are kept, ties broken by that order.
pub fn observe(ego: &VehicleState, relation: &LaneRelation, others: &[VehicleState]) -> Observation {
    let mut obs = Vec::with_capacity(OBSERVATION_DIM);
    obs.push(clamp(ego.speed / MAX_SPEED));
    obs.push(ego.heading.sin());
    obs.push(ego.heading.cos());
    obs.push(clamp(relation.signed_distance / DISTANCE_SCALE));
    obs.push(clamp(relation.lhd / std::f64::consts::PI));

    let mut order: Vec<(f64, usize)> = others
        .iter()
        .enumerate()
        .map(|(i, o)| (o.position.distance(ego.position), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let ego_velocity = ego.velocity();
    for &(_, i) in order.iter().take(NEIGHBORS) {
        let o = &others[i];
        let dp = (o.position - ego.position).rotate(-ego.heading);
        let dv = (o.velocity() - ego_velocity).rotate(-ego.heading);
        obs.extend([
            1.0,
            clamp(dp.x / POSITION_SCALE),
            clamp(dp.y / POSITION_SCALE),
            clamp(dv.x / MAX_SPEED),
            clamp(dv.y / MAX_SPEED),
        ]);
    }
    obs.resize(OBSERVATION_DIM, 0.0);
    obs
}

fn clamp(v: f64) -> f64 {
    v.clamp(-1.0, 1.0)
}
