//! Lane geometry and lane-relative measurements over a road network.

mod lane;
mod network;
mod relation;

pub use lane::{Lane, LaneGeometry, LaneId, LanePoint, Projection, Turn};
pub use network::{Candidate, Component, ComponentKind, RoadNetwork, GRID_CELL, JUNCTION_TOLERANCE};
pub use relation::{
    current_lane, lane_heading_difference, lane_relation, orientation, signed_distance,
    LaneRelation, HEADING_WEIGHT, HYSTERESIS, TRACKING_CANDIDATES,
};
