//! Scripted surrounding traffic: IDM car following plus pure-pursuit steering
//! along a fixed lane route.

use serde::{Deserialize, Serialize};

use super::vehicle::{bicycle_step, Action, VehicleState, MAX_ACCELERATION, MAX_STEERING};
use crate::geom::{normalize_angle, Vec2};
use crate::roadnet::{LaneId, RoadNetwork};
use crate::{Error, Result};

pub const TIME_HEADWAY: f64 = 1.5;
pub const MIN_GAP: f64 = 2.0;
pub const LOOKAHEAD: f64 = 5.0;
/// Distance before a lane end at which the vehicle moves on to its next route lane.
pub const HANDOVER_DISTANCE: f64 = 2.0;
pub const IDM_MAX_ACCEL: f64 = 2.0;
pub const IDM_COMFORT_DECEL: f64 = 3.0;
const IDM_EXPONENT: i32 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficVehicle {
    pub state: VehicleState,
    /// Lanes to drive, starting with the current one.
    pub route: Vec<LaneId>,
    pub target_speed: f64,
    pub time_headway: f64,
    pub min_gap: f64,
}

/// Result of advancing one traffic vehicle.
#[derive(Debug, Clone, PartialEq)]
pub enum TrafficStep {
    Moved(TrafficVehicle),
    /// The route ran out; the vehicle leaves the scene.
    Despawned,
}

impl TrafficVehicle {
    pub fn new(state: VehicleState, route: Vec<LaneId>, target_speed: f64) -> Self {
        TrafficVehicle {
            state,
            route,
            target_speed,
            time_headway: TIME_HEADWAY,
            min_gap: MIN_GAP,
        }
    }

    pub fn lane(&self) -> Option<LaneId> {
        self.route.first().copied()
    }

    /// IDM acceleration and pure-pursuit steering for the current situation.
    pub fn control(&self, network: &RoadNetwork, others: &[VehicleState]) -> Result<Action> {
        let lane_id = self
            .lane()
            .ok_or_else(|| Error::ContractViolation("traffic route is empty".into()))?;
        let lane = network.lane(lane_id)?;
        let s = lane.project(self.state.position).point.arc_length;

        let leader = self.leader(network, others, s)?;
        let v = self.state.speed;
        let free = 1.0 - (v.max(0.0) / self.target_speed).powi(IDM_EXPONENT);
        let interaction = match leader {
            Some((gap, leader_speed)) => {
                let dv = v - leader_speed;
                let desired = self.min_gap
                    + (v * self.time_headway
                        + v * dv / (2.0 * (IDM_MAX_ACCEL * IDM_COMFORT_DECEL).sqrt()))
                    .max(0.0);
                (desired / gap.max(0.1)).powi(2)
            }
            None => 0.0,
        };
        let accel = IDM_MAX_ACCEL * (free - interaction);

        let target = self.route_point(network, s + LOOKAHEAD)?;
        let to_target = target - self.state.position;
        let lookahead = to_target.norm();
        let steering = if lookahead < 1e-9 {
            0.0
        } else {
            let alpha = normalize_angle(to_target.angle() - self.state.heading);
            let curvature = 2.0 * alpha.sin() / lookahead;
            let slip = (curvature * self.state.length / 2.0).clamp(-0.99, 0.99).asin();
            (2.0 * slip.tan()).atan()
        };
        Ok(Action::new(
            steering.clamp(-MAX_STEERING, MAX_STEERING),
            accel.clamp(-MAX_ACCELERATION, MAX_ACCELERATION),
        ))
    }

    /// Bumper-to-bumper gap and speed of the closest vehicle ahead on the
    /// current or next route lane.
    fn leader(
        &self,
        network: &RoadNetwork,
        others: &[VehicleState],
        s: f64,
    ) -> Result<Option<(f64, f64)>> {
        let mut best: Option<(f64, f64)> = None;
        let mut offset = 0.0;
        for (k, &lane_id) in self.route.iter().take(2).enumerate() {
            let lane = network.lane(lane_id)?;
            let here = if k == 0 { s } else { f64::NEG_INFINITY };
            for other in others {
                let pr = lane.project(other.position);
                if pr.overshoot != 0.0 || pr.distance > lane.width / 2.0 + other.width / 2.0 {
                    continue;
                }
                let ahead = pr.point.arc_length;
                if ahead <= here {
                    continue;
                }
                let gap = offset + ahead - s - (self.state.length + other.length) / 2.0;
                if best.map_or(true, |(g, _)| gap < g) {
                    best = Some((gap, other.speed));
                }
            }
            offset += lane.length();
        }
        Ok(best)
    }

    /// Centerline point `s` meters along the route from the start of the
    /// current lane, extrapolated along the final tangent past the route end.
    fn route_point(&self, network: &RoadNetwork, mut s: f64) -> Result<Vec2> {
        let mut last = None;
        for &id in &self.route {
            let lane = network.lane(id)?;
            let len = lane.length();
            if s <= len {
                return Ok(lane.point_at(s).position);
            }
            s -= len;
            last = Some(lane.point_at(len));
        }
        let end = last.ok_or_else(|| Error::ContractViolation("traffic route is empty".into()))?;
        Ok(end.position + Vec2::from_angle(end.heading) * s)
    }
}

/// Advances one traffic vehicle by `dt`.
pub fn traffic_step(
    vehicle: &TrafficVehicle,
    network: &RoadNetwork,
    others: &[VehicleState],
    dt: f64,
) -> Result<TrafficStep> {
    if vehicle.route.is_empty() {
        return Err(Error::ContractViolation("traffic route is empty".into()));
    }
    let action = vehicle.control(network, others)?;
    let mut next = vehicle.clone();
    next.state = bicycle_step(&vehicle.state, action, dt)?;
    let lane = network.lane(next.route[0])?;
    let pr = lane.project(next.state.position);
    if pr.point.arc_length >= lane.length() - HANDOVER_DISTANCE {
        if next.route.len() == 1 {
            return Ok(TrafficStep::Despawned);
        }
        next.route.remove(0);
        next.target_speed = network.lane(next.route[0])?.speed_limit;
    }
    Ok(TrafficStep::Moved(next))
}
