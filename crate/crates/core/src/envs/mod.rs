//! Episodic driving environment, rewards and scenario layouts.

mod env;
mod observation;
mod reward;
mod scenarios;

pub use env::{
    load_scenario, reset, write_trace_csv, ActionKind, Env, EnvConfig, Environment, SpawnMode,
    StepInfo, StepResult, TraceRow, DEFAULT_DT, FIXTURES_ENV, GRID_MAX_STEERING, SPAWN_GAP,
    SPAWN_SPEED,
};
pub use observation::{observe, Observation, NEIGHBORS, OBSERVATION_DIM};
pub use reward::{baseline_reward, modified_reward, reward, RewardKind, CRASH_REWARD, REFERENCE_SPEED};
pub use scenarios::{
    build_scenario, scenario, Scenario, ScenarioName, SpawnPoint, LANE_WIDTH, SPAWN_MIN_LANE_LENGTH,
};
