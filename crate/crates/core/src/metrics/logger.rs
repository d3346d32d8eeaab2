//! Per-episode driving indicators.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Action, VehicleState, MAX_ACCELERATION};
use crate::roadnet::LaneRelation;
use crate::{Error, Result};

const ACCEL_RANGE: f64 = 2.0 * MAX_ACCELERATION;
const STEERING_RANGE: f64 = PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jerk {
    pub accel: f64,
    pub steer: f64,
    pub total: f64,
}

/// Normalized change between consecutive actions. The acceleration term is
/// previous minus current, the steering term current minus previous.
pub fn step_jerk(prev: Action, cur: Action) -> Jerk {
    let accel = (prev.acceleration - cur.acceleration) / ACCEL_RANGE;
    let steer = (cur.steering - prev.steering) / STEERING_RANGE;
    Jerk {
        accel,
        steer,
        total: (accel + steer) / 2.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    /// m/s
    pub avg_speed: f64,
    pub peak_jerk: f64,
    pub total_jerk: f64,
    /// m
    pub total_distance: f64,
    /// Sum of |steering| in radians.
    pub total_steering: f64,
    /// Steps.
    pub runtime: usize,
    pub onlane_rate: f64,
    pub collided: bool,
}

/// Accumulates indicators over one episode.
#[derive(Debug, Clone, Default)]
pub struct EpisodeLogger {
    steps: usize,
    elapsed: f64,
    distance: f64,
    steering: f64,
    onlane_steps: usize,
    total_jerk: f64,
    peak_jerk: f64,
    prev_action: Option<Action>,
    collided: bool,
    closed: bool,
}

impl EpisodeLogger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Logger continuing from an earlier action, so the first recorded step
    /// measures jerk against it.
    pub fn continuing_from(action: Action) -> Self {
        EpisodeLogger {
            prev_action: Some(action),
            ..Self::default()
        }
    }

    pub fn record_step(
        &mut self,
        state: &VehicleState,
        action: Action,
        relation: &LaneRelation,
        dt: f64,
    ) -> Result<()> {
        if self.closed {
            return Err(Error::ContractViolation("episode logger is closed".into()));
        }
        let jerk = step_jerk(self.prev_action.unwrap_or(action), action).total.abs();
        self.prev_action = Some(action);
        self.total_jerk += jerk;
        self.peak_jerk = self.peak_jerk.max(jerk);
        self.steps += 1;
        self.elapsed += dt;
        self.distance += state.speed.abs() * dt;
        self.steering += action.steering.abs();
        self.onlane_steps += usize::from(relation.onlane);
        self.collided |= state.crashed;
        Ok(())
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Closes the episode and returns its indicators.
    pub fn finalize(&mut self) -> Result<EpisodeMetrics> {
        if self.closed {
            return Err(Error::ContractViolation("episode logger is closed".into()));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("no steps were recorded".into()));
        }
        self.closed = true;
        Ok(EpisodeMetrics {
            avg_speed: self.distance / self.elapsed,
            peak_jerk: self.peak_jerk,
            total_jerk: self.total_jerk,
            total_distance: self.distance,
            total_steering: self.steering,
            runtime: self.steps,
            onlane_rate: self.onlane_steps as f64 / self.steps as f64,
            collided: self.collided,
        })
    }
}

/// Means of the eight indicators over a set of runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Indicators {
    pub speed: f64,
    pub pk_jerk: f64,
    pub tot_jerk: f64,
    pub tot_distance: f64,
    pub tot_steering: f64,
    pub runtime: f64,
    pub onlane_rate: f64,
    pub col_rate: f64,
}

impl Indicators {
    pub const NAMES: [&'static str; 8] = [
        "speed",
        "pk_jerk",
        "tot_jerk",
        "tot_distance",
        "tot_steering",
        "runtime",
        "onlane_rate",
        "col_rate",
    ];

    pub fn values(&self) -> [f64; 8] {
        [
            self.speed,
            self.pk_jerk,
            self.tot_jerk,
            self.tot_distance,
            self.tot_steering,
            self.runtime,
            self.onlane_rate,
            self.col_rate,
        ]
    }

    pub fn from_values(v: [f64; 8]) -> Self {
        Indicators {
            speed: v[0],
            pk_jerk: v[1],
            tot_jerk: v[2],
            tot_distance: v[3],
            tot_steering: v[4],
            runtime: v[5],
            onlane_rate: v[6],
            col_rate: v[7],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub means: Indicators,
    pub runs: usize,
}

impl AggregateReport {
    pub fn collision_rate(&self) -> f64 {
        self.means.col_rate
    }
}

/// Plain arithmetic means over all episodes.
pub fn aggregate(episodes: &[EpisodeMetrics]) -> Result<AggregateReport> {
    if episodes.is_empty() {
        return Err(Error::InvalidArgument("no episodes to aggregate".into()));
    }
    let n = episodes.len() as f64;
    // Running mean over sorted values: exact for constant runs and
    // independent of episode order.
    let mean = |f: &dyn Fn(&EpisodeMetrics) -> f64| {
        let mut values: Vec<f64> = episodes.iter().map(f).collect();
        values.sort_by(f64::total_cmp);
        values
            .iter()
            .enumerate()
            .fold(0.0, |m, (k, v)| m + (v - m) / (k + 1) as f64)
    };
    let collisions = episodes.iter().filter(|e| e.collided).count();
    Ok(AggregateReport {
        means: Indicators {
            speed: mean(&|e| e.avg_speed),
            pk_jerk: mean(&|e| e.peak_jerk),
            tot_jerk: mean(&|e| e.total_jerk),
            tot_distance: mean(&|e| e.total_distance),
            tot_steering: mean(&|e| e.total_steering),
            runtime: mean(&|e| e.runtime as f64),
            onlane_rate: mean(&|e| e.onlane_rate),
            col_rate: collisions as f64 / n,
        },
        runs: episodes.len(),
    })
}
