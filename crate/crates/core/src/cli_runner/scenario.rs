use std::path::Path;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use super::RunnerError;
use crate::geometry::Pose2;
use crate::leader_fusion::FusionConfig;
use crate::leader_tracker::TrackerConfig;
use crate::nav_rmp::NavConfig;
use crate::rf_array::AoaConfig;
use crate::world_sim::{Agent, AgentMotion, RobotConfig, SensorSuiteConfig, WorldModel, BODY_RADIUS, MAX_AGENT_SPEED};

pub const SCHEMA_VERSION: u32 = 1;

/// Longest accepted run, seconds.
pub const MAX_DURATION: f64 = 3600.0;

/// Waypoint list, or the literal `"interactive"` for a steerable agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PathSpec {
    Waypoints(Vec<[f64; 2]>),
    Mode(String),
}

impl Default for PathSpec {
    fn default() -> Self {
        PathSpec::Waypoints(Vec::new())
    }
}

fn default_speed() -> f64 {
    1.0
}

fn default_beacon_elevation() -> f64 {
    0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub id: u32,
    pub start: [f64; 2],
    #[serde(default)]
    pub path: PathSpec,
    #[serde(default = "default_speed")]
    pub speed: f64,
    /// Scripted agents wait at their start until this time.
    #[serde(default)]
    pub start_time: f64,
    #[serde(default, rename = "loop")]
    pub looped: bool,
    #[serde(default)]
    pub leader: bool,
    /// Beacon height above the RF array plane.
    #[serde(default = "default_beacon_elevation")]
    pub beacon_elevation: f64,
}

impl AgentSpec {
    pub fn to_agent(&self) -> Agent {
        let start = Point2::new(self.start[0], self.start[1]);
        let mut agent = match &self.path {
            PathSpec::Waypoints(w) => {
                let mut a = Agent::scripted(self.id, start, w.iter().map(|p| Point2::new(p[0], p[1])).collect(), self.speed);
                if let AgentMotion::Scripted { looped, start_time, .. } = &mut a.motion {
                    *looped = self.looped;
                    *start_time = self.start_time;
                }
                a
            }
            PathSpec::Mode(_) => {
                let mut a = Agent::scripted(self.id, start, Vec::new(), self.speed);
                a.motion = AgentMotion::Interactive;
                a
            }
        };
        if self.leader {
            agent = agent.with_beacon();
            agent.beacon_elevation = self.beacon_elevation;
        }
        agent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub start: Pose2,
    #[serde(default)]
    pub config: RobotConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    pub world: WorldModel,
    pub agents: Vec<AgentSpec>,
    pub robot: RobotSpec,
    #[serde(default)]
    pub sensors: SensorSuiteConfig,
    #[serde(default)]
    pub aoa: AoaConfig,
    #[serde(default)]
    pub fusion: FusionConfig,
    #[serde(default)]
    pub tracker: TrackerConfig,
    #[serde(default)]
    pub nav: NavConfig,
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Self, RunnerError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| RunnerError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn leader(&self) -> Option<&AgentSpec> {
        self.agents.iter().find(|a| a.leader)
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        let invalid = |field: String, message: String| Err(RunnerError::Invalid { field, message });
        if self.schema_version != SCHEMA_VERSION {
            return invalid("schema_version".into(), format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version));
        }
        if !(self.duration > 0.0 && self.duration <= MAX_DURATION) {
            return invalid("duration".into(), format!("must be in (0, {MAX_DURATION}] s"));
        }
        if let Err(m) = self.world.validate() {
            return invalid("world".into(), m);
        }
        let leaders = self.agents.iter().filter(|a| a.leader).count();
        if leaders != 1 {
            return invalid("agents".into(), format!("exactly one leader required, found {leaders}"));
        }
        let inside = |p: &[f64; 2]| p.iter().all(|v| v.is_finite()) && self.world.contains_xy(&Point2::new(p[0], p[1]));
        for (i, a) in self.agents.iter().enumerate() {
            if self.agents[..i].iter().any(|b| b.id == a.id) {
                return invalid(format!("agents[{i}].id"), format!("duplicate id {}", a.id));
            }
            if !inside(&a.start) {
                return invalid(format!("agents[{i}].start"), "outside world bounds".into());
            }
            if self.world.footprint_clearance(&Point2::new(a.start[0], a.start[1]), BODY_RADIUS) < 0.0 {
                return invalid(format!("agents[{i}].start"), "overlaps an obstacle".into());
            }
            if !(a.speed > 0.0 && a.speed <= MAX_AGENT_SPEED) {
                return invalid(format!("agents[{i}].speed"), format!("must be in (0, {MAX_AGENT_SPEED}] m/s"));
            }
            if !(a.start_time >= 0.0) {
                return invalid(format!("agents[{i}].start_time"), "must be non-negative".into());
            }
            if !(a.beacon_elevation.abs() <= 2.0) {
                return invalid(format!("agents[{i}].beacon_elevation"), "must be within ±2 m".into());
            }
            match &a.path {
                PathSpec::Waypoints(w) => {
                    if let Some(j) = w.iter().position(|p| !inside(p)) {
                        return invalid(format!("agents[{i}].path[{j}]"), format!("waypoint {:?} is outside world bounds", w[j]));
                    }
                }
                PathSpec::Mode(m) if m == "interactive" => {}
                PathSpec::Mode(m) => {
                    return invalid(format!("agents[{i}].path"), format!("expected a waypoint list or \"interactive\", got \"{m}\""));
                }
            }
        }
        let start = &self.robot.start;
        if !start.is_finite() || !self.world.contains_xy(&start.position()) {
            return invalid("robot.start".into(), "outside world bounds".into());
        }
        if self.world.footprint_clearance(&start.position(), self.robot.config.radius) < 0.0 {
            return invalid("robot.start".into(), "overlaps an obstacle".into());
        }
        for (field, rate) in [
            ("sensors.lidar_rate", self.sensors.lidar_rate),
            ("sensors.camera_rate", self.sensors.camera_rate),
            ("sensors.beacon_rate", self.sensors.beacon_rate),
        ] {
            if rate == 0 || rate > 200 {
                return invalid(field.into(), "must be in 1..=200 Hz".into());
            }
        }
        if let Err(m) = self.nav.validate() {
            let field = m.split_whitespace().next().unwrap_or("nav").trim_end_matches(':').to_string();
            return invalid(field, m);
        }
        Ok(())
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, RunnerError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunnerError::Io(format!("{}: {e}", path.display())))?;
    Scenario::from_json_str(&text)
}
