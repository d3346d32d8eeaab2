//! Lane-relative quantities seen by the ego car.
//!
//! Frame convention: the world frame is screen-style (x to the right, y
//! downwards), so headings grow clockwise on screen and the driver's left of a
//! lane tangent is the side where `cross(tangent, offset) < 0`. Distances to
//! the left are positive. With this convention a car whose `sgn(LHD)·sgn(d)`
//! is negative is steering back toward the lane.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::lane::{LaneId, LanePoint};
use super::network::RoadNetwork;
use crate::dynamics::VehicleState;
use crate::geom::{in_half_open_pi, Vec2};
use crate::{Error, Result};

/// Heading weight of the lane-tracking cost, meters per radian.
pub const HEADING_WEIGHT: f64 = 2.0;
/// Cost margin within which the previously tracked lane is kept.
pub const HYSTERESIS: f64 = 0.1;
/// Number of nearest lanes considered when tracking the current lane.
pub const TRACKING_CANDIDATES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneRelation {
    pub lane_id: LaneId,
    pub closest_point: LanePoint,
    pub signed_distance: f64,
    pub lhd: f64,
    pub onlane: bool,
}

/// +1 when `position` is on the driver's left of the tangent through
/// `lane_point`, −1 otherwise (including on the tangent line itself).
pub fn orientation(position: Vec2, lane_point: &LanePoint) -> f64 {
    let tangent = Vec2::from_angle(lane_point.heading);
    if tangent.cross(position - lane_point.position) < 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Orientation-signed distance from `position` to the closest point of a lane.
pub fn signed_distance(position: Vec2, network: &RoadNetwork, lane_id: LaneId) -> Result<f64> {
    let pr = network.lane(lane_id)?.project(position);
    Ok(signed(position, &pr.point, pr.distance))
}

fn signed(position: Vec2, point: &LanePoint, distance: f64) -> f64 {
    if distance == 0.0 {
        0.0
    } else {
        orientation(position, point) * distance
    }
}

/// Lane heading minus car heading, wrapped into (−π, π].
pub fn lane_heading_difference(lane_heading: f64, car_heading: f64) -> Result<f64> {
    if !in_half_open_pi(lane_heading) || !in_half_open_pi(car_heading) {
        return Err(Error::InvalidArgument(format!(
            "headings must lie in (-pi, pi], got {lane_heading} and {car_heading}"
        )));
    }
    let raw = lane_heading - car_heading;
    Ok(if raw < -PI {
        raw + TAU
    } else if raw > PI {
        raw - TAU
    } else {
        raw
    })
}

/// Heading-aware tracking of the lane the vehicle is driving on.
///
/// Among the nearest candidate lanes, picks the one minimizing
/// `|d| + HEADING_WEIGHT·|LHD|`. The previous lane is retained while its cost
/// stays within [`HYSTERESIS`] of the best.
pub fn current_lane(
    network: &RoadNetwork,
    vehicle: &VehicleState,
    previous_lane: Option<LaneId>,
) -> Result<LaneId> {
    let candidates = network.nearest_lanes(vehicle.position, TRACKING_CANDIDATES);
    if candidates.is_empty() {
        return Err(Error::NoLane);
    }
    let mut best: Option<(f64, LaneId)> = None;
    let mut previous_cost = None;
    for c in &candidates {
        let lhd = lane_heading_difference(c.projection.point.heading, vehicle.heading)?;
        let cost = c.projection.distance + HEADING_WEIGHT * lhd.abs();
        if Some(c.lane) == previous_lane {
            previous_cost = Some(cost);
        }
        best = match best {
            Some((bc, bid)) if bc < cost || (bc == cost && bid < c.lane) => Some((bc, bid)),
            _ => Some((cost, c.lane)),
        };
    }
    let (best_cost, best_id) = best.expect("non-empty candidates");
    match (previous_lane, previous_cost) {
        (Some(prev), Some(pc)) if pc <= best_cost + HYSTERESIS => Ok(prev),
        _ => Ok(best_id),
    }
}

/// Full lane-relative summary of a vehicle with respect to one lane.
pub fn lane_relation(
    network: &RoadNetwork,
    vehicle: &VehicleState,
    lane_id: LaneId,
) -> Result<LaneRelation> {
    let lane = network.lane(lane_id)?;
    let pr = lane.project(vehicle.position);
    let signed_distance = signed(vehicle.position, &pr.point, pr.distance);
    let lhd = lane_heading_difference(pr.point.heading, vehicle.heading)?;
    Ok(LaneRelation {
        lane_id,
        closest_point: pr.point,
        signed_distance,
        lhd,
        onlane: signed_distance.abs() <= lane.width / 2.0,
    })
}
