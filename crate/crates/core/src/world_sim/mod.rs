//! Deterministic 2.5D world: static geometry, scripted or steered agents, a
//! lagged holonomic robot, and LiDAR, camera and beacon IQ sensor models.

mod agents;
mod beacon;
mod cameras;
mod lidar;
mod robot;
mod sim;
mod world;

use thiserror::Error;

pub use agents::{Agent, AgentMotion, LeaderCommand, BODY_HEIGHT, BODY_RADIUS, MAX_AGENT_SPEED};
pub use beacon::{beacon_bearing, propagation_paths, simulate_beacon_iq, BeaconConfig, RfPath};
pub use cameras::{simulate_cameras, CameraConfig, DetectionBox};
pub use lidar::{simulate_lidar, LidarConfig, LidarScan};
pub use robot::{clamp_velocity, RobotConfig, RobotState};
pub use sim::{fires, stream_rng, AgentTruth, SensorSuiteConfig, Simulation, Stream, TruthRecord, PHYSICS_RATE};
pub use world::{ray_aabb, ray_capsule, ray_cylinder, ray_wall, Capsule, Cylinder, HitKind, RayHit, Resolved, Wall, WorldModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid world: {0}")]
    InvalidWorld(String),
    #[error("leader command of {0:.3} m/s exceeds the 2.5 m/s limit")]
    CommandRange(f64),
    #[error("no leader is defined")]
    NoLeader,
    #[error("time step {0} s is outside (0, 0.02]")]
    TimeStep(f64),
}
