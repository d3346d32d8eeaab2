//! Vehicle kinematics, scripted traffic and collision detection.

mod collision;
mod traffic;
mod vehicle;

pub use collision::collision_check;
pub use traffic::{
    traffic_step, TrafficStep, TrafficVehicle, HANDOVER_DISTANCE, LOOKAHEAD, MIN_GAP,
    TIME_HEADWAY,
};
pub use vehicle::{
    bicycle_step, turning_radius, Action, ActionGrid, VehicleState, DEFAULT_LENGTH,
    DEFAULT_WIDTH, MAX_ACCELERATION, MAX_SPEED, MAX_STEERING, MIN_SPEED,
};
