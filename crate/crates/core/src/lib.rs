//! Lane-relative driving simulator with deep reinforcement learning agents.
//!
//! The crate is split along the simulation pipeline:
//!
//! - [`roadnet`]: lane geometry, closest-point projection and lane tracking
//! - [`dynamics`]: kinematic bicycle integration, scripted traffic, collisions
//! - [`envs`]: the episodic environment, rewards and scenario builders
//! - [`agents`]: MLP function approximation, DQN and TRPO
//! - [`metrics`]: per-episode driving indicators and multi-run reports

pub mod agents;
pub mod dynamics;
pub mod envs;
mod error;
pub mod geom;
pub mod metrics;
pub mod roadnet;

pub use error::{Error, Result};
