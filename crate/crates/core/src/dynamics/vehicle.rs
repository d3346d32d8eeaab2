use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::geom::{normalize_angle, Vec2};
use crate::{Error, Result};

pub const MAX_STEERING: f64 = FRAC_PI_2;
pub const MAX_ACCELERATION: f64 = 5.0;
pub const MIN_SPEED: f64 = -5.0;
pub const MAX_SPEED: f64 = 40.0;
pub const DEFAULT_LENGTH: f64 = 5.0;
pub const DEFAULT_WIDTH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Center of the vehicle footprint.
    pub position: Vec2,
    /// Heading in (−π, π].
    pub heading: f64,
    /// Longitudinal speed, m/s. Negative when reversing.
    pub speed: f64,
    pub crashed: bool,
    pub length: f64,
    pub width: f64,
}

impl VehicleState {
    pub fn new(position: Vec2, heading: f64, speed: f64) -> Self {
        VehicleState {
            position,
            heading: normalize_angle(heading),
            speed,
            crashed: false,
            length: DEFAULT_LENGTH,
            width: DEFAULT_WIDTH,
        }
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::from_angle(self.heading) * self.speed
    }
}

/// A steering/acceleration command, clamped to the admissible box.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub steering: f64,
    pub acceleration: f64,
}

impl Action {
    pub fn new(steering: f64, acceleration: f64) -> Self {
        Action {
            steering: steering.clamp(-MAX_STEERING, MAX_STEERING),
            acceleration: acceleration.clamp(-MAX_ACCELERATION, MAX_ACCELERATION),
        }
    }
}

/// Kinematic bicycle step with the reference point midway between the axles.
///
/// Speed is integrated first; the pose is then advanced with the new speed.
pub fn bicycle_step(state: &VehicleState, action: Action, dt: f64) -> Result<VehicleState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let action = Action::new(action.steering, action.acceleration);
    let slip = (0.5 * action.steering.tan()).atan();
    let rear = state.length / 2.0;
    let speed = (state.speed + action.acceleration * dt).clamp(MIN_SPEED, MAX_SPEED);
    let course = state.heading + slip;
    let mut next = *state;
    next.speed = speed;
    next.position = state.position + Vec2::from_angle(course) * (speed * dt);
    next.heading = normalize_angle(state.heading + speed / rear * slip.sin() * dt);
    Ok(next)
}

/// Radius of the steady-state circle driven at constant steering.
pub fn turning_radius(steering: f64, length: f64) -> f64 {
    let slip = (0.5 * steering.tan()).atan();
    (length / 2.0) / slip.sin().abs()
}

/// Discrete action set: steering levels × acceleration levels, indexed
/// row-major (steering major, acceleration minor).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionGrid {
    steering_levels: Vec<f64>,
    accel_levels: Vec<f64>,
}

impl ActionGrid {
    pub fn new(steering_levels: Vec<f64>, accel_levels: Vec<f64>) -> Result<Self> {
        let check = |levels: &[f64], bound: f64, name: &str| -> Result<()> {
            if levels.is_empty() {
                return Err(Error::InvalidArgument(format!("{name} levels are empty")));
            }
            if levels.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidArgument(format!(
                    "{name} levels must be strictly increasing"
                )));
            }
            if levels.iter().any(|v| !(v.abs() <= bound)) {
                return Err(Error::InvalidArgument(format!(
                    "{name} levels must lie within ±{bound}"
                )));
            }
            Ok(())
        };
        check(&steering_levels, MAX_STEERING, "steering")?;
        check(&accel_levels, MAX_ACCELERATION, "acceleration")?;
        Ok(ActionGrid {
            steering_levels,
            accel_levels,
        })
    }

    /// Evenly spaced levels spanning `±max_steering` and the full acceleration range.
    pub fn uniform(n: usize, m: usize, max_steering: f64) -> Result<Self> {
        let max_steering = max_steering.min(MAX_STEERING);
        ActionGrid::new(linspace(max_steering, n), linspace(MAX_ACCELERATION, m))
    }

    pub fn steering_levels(&self) -> &[f64] {
        &self.steering_levels
    }

    pub fn accel_levels(&self) -> &[f64] {
        &self.accel_levels
    }

    pub fn len(&self) -> usize {
        self.steering_levels.len() * self.accel_levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn discretize(&self, index: usize) -> Result<Action> {
        if index >= self.len() {
            return Err(Error::InvalidArgument(format!(
                "action index {index} out of range for {} actions",
                self.len()
            )));
        }
        let m = self.accel_levels.len();
        Ok(Action {
            steering: self.steering_levels[index / m],
            acceleration: self.accel_levels[index % m],
        })
    }

    pub fn nearest_index(&self, action: Action) -> usize {
        let nearest = |levels: &[f64], v: f64| {
            let mut best = 0;
            for (i, l) in levels.iter().enumerate() {
                if (l - v).abs() < (levels[best] - v).abs() {
                    best = i;
                }
            }
            best
        };
        nearest(&self.steering_levels, action.steering) * self.accel_levels.len()
            + nearest(&self.accel_levels, action.acceleration)
    }
}

fn linspace(bound: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|i| -bound + 2.0 * bound * i as f64 / (n - 1) as f64)
        .collect()
}
