//! Episodic driving environment.

use std::path::Path;
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::observation::{observe, Observation, OBSERVATION_DIM};
use super::reward::{reward, RewardKind};
use super::scenarios::{scenario, Scenario, ScenarioName};
use crate::dynamics::{
    bicycle_step, collision_check, traffic_step, Action, ActionGrid, TrafficStep, TrafficVehicle,
    VehicleState, MAX_STEERING,
};
use crate::roadnet::{current_lane, lane_relation, LaneId, LaneRelation};
use crate::{Error, Result};

/// Control and simulation frequency.
pub const DEFAULT_DT: f64 = 1.0 / 15.0;
pub const SPAWN_SPEED: f64 = 10.0;
/// Minimum center distance between any two vehicles at spawn.
pub const SPAWN_GAP: f64 = 10.0;
/// Steering bound of discrete action grids.
pub const GRID_MAX_STEERING: f64 = MAX_STEERING / 2.0;
/// Environment variable naming a directory of scenario fixtures that
/// replaces the built-in layouts.
pub const FIXTURES_ENV: &str = "DRLC_FIXTURES";

const SPAWN_ATTEMPTS: usize = 8;
const ROUTE_HORIZON: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ActionKind {
    Continuous,
    Grid { n: usize, m: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpawnMode {
    Fixed,
    Randomized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub scenario: ScenarioName,
    pub seed: u64,
    pub max_steps: usize,
    /// m/s
    pub min_speed: f64,
    pub min_speed_patience: usize,
    pub traffic_count: usize,
    pub reward_kind: RewardKind,
    pub action_kind: ActionKind,
    pub spawn: SpawnMode,
    pub dt: f64,
}

impl EnvConfig {
    pub fn new(scenario: ScenarioName) -> Self {
        EnvConfig {
            scenario,
            seed: 0,
            max_steps: scenario.default_max_steps(),
            min_speed: 1.0,
            min_speed_patience: 50,
            traffic_count: scenario.default_traffic(),
            reward_kind: RewardKind::Modified,
            action_kind: ActionKind::Continuous,
            spawn: if scenario == ScenarioName::Complexroads {
                SpawnMode::Randomized
            } else {
                SpawnMode::Fixed
            },
            dt: DEFAULT_DT,
        }
    }

    /// Parses a JSON document. Only `scenario` is required; every other key
    /// overrides the scenario's defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: serde_json::Value = serde_json::from_str(text)?;
        let name = doc
            .get("scenario")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::InvalidArgument("env config needs a \"scenario\" string".into()))?;
        EnvConfig::new(name.parse()?).merged(&doc)
    }

    /// Applies the keys of a JSON object on top of this config.
    pub fn merged(&self, overrides: &serde_json::Value) -> Result<Self> {
        let patch = overrides
            .as_object()
            .ok_or_else(|| Error::InvalidArgument("env config must be a JSON object".into()))?;
        let mut base = serde_json::to_value(self)?;
        let obj = base.as_object_mut().expect("config serializes to an object");
        if let Some(name) = patch.get("scenario").and_then(|v| v.as_str()) {
            // Scenario-dependent defaults follow a scenario change.
            let fresh = serde_json::to_value(EnvConfig::new(name.parse()?))?;
            for key in ["max_steps", "traffic_count", "spawn"] {
                obj.insert(key.into(), fresh[key].clone());
            }
        }
        for (k, v) in patch {
            obj.insert(k.clone(), v.clone());
        }
        let config: EnvConfig = serde_json::from_value(base)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.min_speed.is_finite() {
            return Err(Error::InvalidArgument("min_speed must be finite".into()));
        }
        if let ActionKind::Grid { n, m } = self.action_kind {
            if n == 0 || m == 0 {
                return Err(Error::InvalidArgument(format!("empty action grid {n}x{m}")));
            }
        }
        if self.reward_kind == RewardKind::Baseline && !self.scenario.has_baseline_reward() {
            return Err(Error::InvalidArgument(format!(
                "{} has no baseline reward",
                self.scenario
            )));
        }
        Ok(())
    }

    pub fn action_grid(&self) -> Option<ActionGrid> {
        match self.action_kind {
            ActionKind::Continuous => None,
            ActionKind::Grid { n, m } => {
                Some(ActionGrid::uniform(n, m, GRID_MAX_STEERING).expect("validated grid size"))
            }
        }
    }
}

/// Loads the named scenario from `DRLC_FIXTURES` when set, otherwise builds it.
pub fn load_scenario(name: ScenarioName) -> Result<Scenario> {
    match std::env::var_os(FIXTURES_ENV) {
        Some(dir) => Scenario::load(Path::new(&dir), name),
        None => scenario(name),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepInfo {
    pub lane_relation: LaneRelation,
    pub speed: f64,
    pub action_applied: Action,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    /// Crash or immobility.
    pub terminated: bool,
    /// Time limit or end of road.
    pub truncated: bool,
    pub info: StepInfo,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// One row of an episode trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub delta: f64,
    pub alpha: f64,
    pub reward: f64,
    pub signed_distance: f64,
    pub lhd: f64,
    pub onlane: bool,
    pub crashed: bool,
}

pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Interface the training loops drive.
pub trait Env {
    fn observation_dim(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Result<Observation>;
    fn step(&mut self, action: Action) -> Result<StepResult>;
    /// Discrete action set, when the environment is configured with one.
    fn action_grid(&self) -> Option<&ActionGrid> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct Environment {
    config: EnvConfig,
    scenario: Arc<Scenario>,
    grid: Option<ActionGrid>,
    spawnable: Vec<LaneId>,
    rng: ChaCha8Rng,
    ego: VehicleState,
    relation: LaneRelation,
    traffic: Vec<TrafficVehicle>,
    step_count: usize,
    slow_steps: usize,
    finished: bool,
    trace: Vec<TraceRow>,
}

/// Creates an environment for `config` and resets it with `config.seed`.
pub fn reset(config: &EnvConfig) -> Result<(Environment, Observation)> {
    let env = Environment::new(config.clone())?;
    let obs = env.observation();
    Ok((env, obs))
}

impl Environment {
    pub fn new(config: EnvConfig) -> Result<Self> {
        let scenario = Arc::new(load_scenario(config.scenario)?);
        Environment::with_scenario(config, scenario)
    }

    /// Shares an already loaded scenario between environments.
    pub fn with_scenario(config: EnvConfig, scenario: Arc<Scenario>) -> Result<Self> {
        config.validate()?;
        if scenario.name != config.scenario {
            return Err(Error::InvalidArgument(format!(
                "scenario {} given for a {} config",
                scenario.name, config.scenario
            )));
        }
        let spawnable = scenario.spawnable_lanes();
        if spawnable.is_empty() {
            return Err(Error::Capacity(format!("{} has no spawnable lane", scenario.name)));
        }
        let seed = config.seed;
        let ego = VehicleState::new(Default::default(), 0.0, 0.0);
        let relation = lane_relation(&scenario.network, &ego, scenario.fixed_spawn.lane)?;
        let mut env = Environment {
            grid: config.action_grid(),
            config,
            scenario,
            spawnable,
            rng: ChaCha8Rng::seed_from_u64(seed),
            ego,
            relation,
            traffic: Vec::new(),
            step_count: 0,
            slow_steps: 0,
            finished: false,
            trace: Vec::new(),
        };
        env.reset_seed(seed)?;
        Ok(env)
    }

    /// Environment with hand-placed vehicles, for scripted situations.
    pub fn from_scene(
        config: EnvConfig,
        scenario: Arc<Scenario>,
        ego: VehicleState,
        traffic: Vec<TrafficVehicle>,
    ) -> Result<Self> {
        let mut env = Environment::with_scenario(config, scenario)?;
        env.ego = ego;
        env.traffic = traffic;
        env.restart_episode(None)?;
        Ok(env)
    }

    pub fn reset_seed(&mut self, seed: u64) -> Result<Observation> {
        self.config.seed = seed;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let network = &self.scenario.network;
        let (lane_id, s) = match self.config.spawn {
            SpawnMode::Fixed => {
                (self.scenario.fixed_spawn.lane, self.scenario.fixed_spawn.arc_length)
            }
            SpawnMode::Randomized => {
                let lane_id = *self.spawnable.choose(&mut self.rng).expect("non-empty");
                let len = network.lane(lane_id)?.length();
                (lane_id, self.rng.random_range(0.0..len))
            }
        };
        let p = network.lane(lane_id)?.point_at(s);
        self.ego = VehicleState::new(p.position, p.heading, SPAWN_SPEED);
        self.traffic = self.spawn_traffic(lane_id)?;
        self.restart_episode(Some(lane_id))?;
        Ok(self.observation())
    }

    fn restart_episode(&mut self, lane: Option<LaneId>) -> Result<()> {
        let lane = match lane {
            Some(l) => l,
            None => current_lane(&self.scenario.network, &self.ego, None)?,
        };
        self.relation = lane_relation(&self.scenario.network, &self.ego, lane)?;
        self.step_count = 0;
        self.slow_steps = 0;
        self.finished = false;
        self.trace.clear();
        Ok(())
    }

    fn spawn_traffic(&mut self, ego_lane: LaneId) -> Result<Vec<TrafficVehicle>> {
        let wanted = self.config.traffic_count;
        if wanted == 0 {
            return Ok(Vec::new());
        }
        let mut lanes: Vec<LaneId> = self.spawnable.iter().copied().filter(|&l| l != ego_lane).collect();
        if lanes.len() < wanted {
            return Err(Error::Capacity(format!(
                "{wanted} traffic vehicles need distinct lanes but {} has only {} besides the ego's",
                self.scenario.name,
                lanes.len()
            )));
        }
        lanes.shuffle(&mut self.rng);
        let scenario = Arc::clone(&self.scenario);
        let mut occupied = vec![self.ego.position];
        let mut traffic = Vec::with_capacity(wanted);
        for lane_id in lanes {
            if traffic.len() == wanted {
                break;
            }
            let lane = scenario.network.lane(lane_id)?;
            for _ in 0..SPAWN_ATTEMPTS {
                let p = lane.point_at(self.rng.random_range(0.0..lane.length()));
                if occupied.iter().all(|o| o.distance(p.position) >= SPAWN_GAP) {
                    occupied.push(p.position);
                    let state = VehicleState::new(p.position, p.heading, lane.speed_limit);
                    let route = self.extend_route(vec![lane_id]);
                    traffic.push(TrafficVehicle::new(state, route, lane.speed_limit));
                    break;
                }
            }
        }
        if traffic.len() < wanted {
            return Err(Error::Capacity(format!(
                "could only place {} of {wanted} traffic vehicles {SPAWN_GAP} m apart",
                traffic.len()
            )));
        }
        Ok(traffic)
    }

    fn extend_route(&mut self, mut route: Vec<LaneId>) -> Vec<LaneId> {
        while route.len() < ROUTE_HORIZON {
            let last = *route.last().expect("route is never empty");
            let next: Vec<LaneId> = self.scenario.network.successors(last).collect();
            match next.choose(&mut self.rng) {
                Some(&l) => route.push(l),
                None => break,
            }
        }
        route
    }

    /// Free spawnable lane whose start is farthest from the ego.
    fn respawn(&mut self) -> Result<Option<TrafficVehicle>> {
        let network = &self.scenario.network;
        let mut best: Option<(f64, LaneId)> = None;
        for &lane_id in &self.spawnable {
            if lane_id == self.relation.lane_id {
                continue;
            }
            let start = network.lane(lane_id)?.start();
            let free = start.distance(self.ego.position) >= SPAWN_GAP
                && self.traffic.iter().all(|t| t.state.position.distance(start) >= SPAWN_GAP);
            let dist = start.distance(self.ego.position);
            if free && best.is_none_or(|(d, _)| dist > d) {
                best = Some((dist, lane_id));
            }
        }
        let Some((_, lane_id)) = best else {
            return Ok(None);
        };
        let lane = network.lane(lane_id)?;
        let p = lane.point_at(0.0);
        let speed = lane.speed_limit;
        let state = VehicleState::new(p.position, p.heading, speed);
        let route = self.extend_route(vec![lane_id]);
        Ok(Some(TrafficVehicle::new(state, route, speed)))
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn ego(&self) -> &VehicleState {
        &self.ego
    }

    pub fn traffic(&self) -> &[TrafficVehicle] {
        &self.traffic
    }

    pub fn relation(&self) -> &LaneRelation {
        &self.relation
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    pub fn action_grid(&self) -> Option<&ActionGrid> {
        self.grid.as_ref()
    }

    pub fn observation(&self) -> Observation {
        let others: Vec<VehicleState> = self.traffic.iter().map(|t| t.state).collect();
        observe(&self.ego, &self.relation, &others)
    }

    /// Steps with a discrete action index; requires a grid action kind.
    pub fn step_index(&mut self, index: usize) -> Result<StepResult> {
        let grid = self.grid.as_ref().ok_or_else(|| {
            Error::InvalidArgument("discrete actions need a grid action kind".into())
        })?;
        let action = grid.discretize(index)?;
        self.step(action)
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult> {
        if self.finished {
            return Err(Error::ContractViolation("step called on a finished episode".into()));
        }
        let mut action = Action::new(action.steering, action.acceleration);
        if let Some(grid) = &self.grid {
            action = grid.discretize(grid.nearest_index(action))?;
        }
        let dt = self.config.dt;
        let network = &self.scenario.network;

        let ego = bicycle_step(&self.ego, action, dt)?;

        let states: Vec<VehicleState> = self.traffic.iter().map(|t| t.state).collect();
        let mut moved = Vec::with_capacity(self.traffic.len());
        let mut despawned = 0;
        for (i, vehicle) in self.traffic.iter().enumerate() {
            let others: Vec<VehicleState> = std::iter::once(self.ego)
                .chain(states.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, s)| *s))
                .collect();
            match traffic_step(vehicle, network, &others, dt)? {
                TrafficStep::Moved(v) => moved.push(v),
                TrafficStep::Despawned => despawned += 1,
            }
        }
        self.ego = ego;
        self.traffic = moved;
        for i in 0..self.traffic.len() {
            if self.traffic[i].route.len() < ROUTE_HORIZON - 1 {
                let route = std::mem::take(&mut self.traffic[i].route);
                self.traffic[i].route = self.extend_route(route);
            }
        }

        let lane = current_lane(&self.scenario.network, &self.ego, Some(self.relation.lane_id))?;
        self.relation = lane_relation(&self.scenario.network, &self.ego, lane)?;
        for _ in 0..despawned {
            if let Some(v) = self.respawn()? {
                self.traffic.push(v);
            }
        }

        self.ego.crashed = self.traffic.iter().any(|t| collision_check(&self.ego, &t.state));
        let r = reward(self.config.reward_kind, &self.ego, &self.relation);

        self.step_count += 1;
        if self.ego.speed < self.config.min_speed {
            self.slow_steps += 1;
        } else {
            self.slow_steps = 0;
        }
        let terminated =
            self.ego.crashed || self.slow_steps >= self.config.min_speed_patience.max(1);
        let network = &self.scenario.network;
        let end_of_road = network.successors(lane).next().is_none()
            && network.lane(lane)?.project(self.ego.position).overshoot > 0.0;
        let truncated = !terminated && (self.step_count >= self.config.max_steps || end_of_road);
        self.finished = terminated || truncated;

        self.trace.push(TraceRow {
            t: self.step_count as f64 * dt,
            x: self.ego.position.x,
            y: self.ego.position.y,
            heading: self.ego.heading,
            speed: self.ego.speed,
            delta: action.steering,
            alpha: action.acceleration,
            reward: r,
            signed_distance: self.relation.signed_distance,
            lhd: self.relation.lhd,
            onlane: self.relation.onlane,
            crashed: self.ego.crashed,
        });

        Ok(StepResult {
            observation: self.observation(),
            reward: r,
            terminated,
            truncated,
            info: StepInfo {
                lane_relation: self.relation,
                speed: self.ego.speed,
                action_applied: action,
            },
        })
    }
}

impl Env for Environment {
    fn observation_dim(&self) -> usize {
        OBSERVATION_DIM
    }

    fn reset(&mut self, seed: u64) -> Result<Observation> {
        self.reset_seed(seed)
    }

    fn step(&mut self, action: Action) -> Result<StepResult> {
        Environment::step(self, action)
    }

    fn action_grid(&self) -> Option<&ActionGrid> {
        self.grid.as_ref()
    }
}
