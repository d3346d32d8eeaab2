//! Per-step reward functions.

use serde::{Deserialize, Serialize};

use crate::dynamics::VehicleState;
use crate::roadnet::LaneRelation;

pub const CRASH_REWARD: f64 = -10.0;
/// Speed giving reward 1 when perfectly aligned on the centerline.
pub const REFERENCE_SPEED: f64 = 20.0;

const BASELINE_COLLISION_WEIGHT: f64 = -1.0;
const BASELINE_SPEED_WEIGHT: f64 = 1.0;
const BASELINE_SPEED_RANGE: (f64, f64) = (20.0, 30.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    Baseline,
    Modified,
}

impl std::fmt::Display for RewardKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RewardKind::Baseline => "baseline",
            RewardKind::Modified => "modified",
        })
    }
}

impl std::str::FromStr for RewardKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(RewardKind::Baseline),
            "modified" => Ok(RewardKind::Modified),
            _ => Err(crate::Error::InvalidArgument(format!("unknown reward {s:?}"))),
        }
    }
}

/// Effective-speed reward: the speed component along the lane, scaled down
/// once the car is more than 1 m off the centerline.
pub fn modified_reward(vehicle: &VehicleState, relation: &LaneRelation) -> f64 {
    if vehicle.crashed {
        return CRASH_REWARD;
    }
    if vehicle.speed < 0.0 {
        return 0.0;
    }
    relation.lhd.abs().cos() * vehicle.speed
        / (REFERENCE_SPEED * relation.signed_distance.abs().max(1.0))
}

/// Approximation of the stock simulator reward: a collision penalty plus a
/// normalized high-speed bonus that only counts while on the lane.
pub fn baseline_reward(vehicle: &VehicleState, relation: &LaneRelation) -> f64 {
    if vehicle.crashed {
        return BASELINE_COLLISION_WEIGHT;
    }
    if !relation.onlane {
        return 0.0;
    }
    let (lo, hi) = BASELINE_SPEED_RANGE;
    BASELINE_SPEED_WEIGHT * ((vehicle.speed - lo) / (hi - lo)).clamp(0.0, 1.0)
}

pub fn reward(kind: RewardKind, vehicle: &VehicleState, relation: &LaneRelation) -> f64 {
    match kind {
        RewardKind::Baseline => baseline_reward(vehicle, relation),
        RewardKind::Modified => modified_reward(vehicle, relation),
    }
}
