use nalgebra::{Point2, Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::agents::{Agent, LeaderCommand, MAX_AGENT_SPEED};
use super::beacon::{simulate_beacon_iq, BeaconConfig};
use super::cameras::{simulate_cameras, CameraConfig, DetectionBox};
use super::lidar::{simulate_lidar, LidarConfig, LidarScan};
use super::robot::{RobotConfig, RobotState};
use super::world::{Capsule, WorldModel};
use super::SimError;
use crate::geometry::Pose2;
use crate::rf_array::{ArrayGeometry, IqSnapshot};

/// Sensor models and their rates. Every representative value left open
/// elsewhere lives here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorSuiteConfig {
    pub lidar: LidarConfig,
    pub cameras: CameraConfig,
    pub beacon: BeaconConfig,
    pub lidar_rate: u32,
    pub camera_rate: u32,
    pub beacon_rate: u32,
}

impl Default for SensorSuiteConfig {
    fn default() -> Self {
        Self {
            lidar: LidarConfig::default(),
            cameras: CameraConfig::default(),
            beacon: BeaconConfig::default(),
            lidar_rate: 10,
            camera_rate: 15,
            beacon_rate: 5,
        }
    }
}

pub const PHYSICS_RATE: u32 = 200;

/// Whether a stage running at `rate` Hz fires on physics tick `tick`.
/// Stages fire on tick 0 and whenever `⌊tick·rate/PHYSICS_RATE⌋` advances,
/// which keeps non-divisor rates such as 15 Hz exact over any whole second.
pub fn fires(tick: u64, rate: u32) -> bool {
    let r = rate as u64;
    let p = PHYSICS_RATE as u64;
    tick == 0 || tick * r / p != (tick - 1) * r / p
}

/// Independent random streams, one per stochastic stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Lidar = 1,
    Cameras = 2,
    Beacon = 3,
    Ransac = 4,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentTruth {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub heading: f64,
    pub leader: bool,
}

/// One physics tick of ground truth. Field order is the log's documented
/// column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthRecord {
    pub t: f64,
    pub robot: Pose2,
    pub agents: Vec<AgentTruth>,
    /// Robot-frame bearing from array centre to beacon; NaN without a leader.
    pub beacon_bearing: f64,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub world: WorldModel,
    pub agents: Vec<Agent>,
    pub robot: RobotState,
    pub robot_config: RobotConfig,
    pub sensors: SensorSuiteConfig,
    geometry: ArrayGeometry,
    lidar_dirs: Vec<Vector3<f64>>,
    tick: u64,
    faults: u32,
    rng_lidar: ChaCha8Rng,
    rng_cameras: ChaCha8Rng,
    rng_beacon: ChaCha8Rng,
}

impl Simulation {
    pub fn new(
        world: WorldModel,
        agents: Vec<Agent>,
        robot_start: Pose2,
        robot_config: RobotConfig,
        sensors: SensorSuiteConfig,
        geometry: ArrayGeometry,
        seed: u64,
    ) -> Result<Self, SimError> {
        world.validate().map_err(SimError::InvalidWorld)?;
        if agents.iter().filter(|a| a.carries_beacon).count() > 1 {
            return Err(SimError::InvalidWorld("more than one agent carries the beacon".into()));
        }
        Ok(Self {
            lidar_dirs: sensors.lidar.ray_directions(),
            world,
            agents,
            robot: RobotState::at(robot_start),
            robot_config,
            sensors,
            geometry,
            tick: 0,
            faults: 0,
            rng_lidar: stream_rng(seed, Stream::Lidar),
            rng_cameras: stream_rng(seed, Stream::Cameras),
            rng_beacon: stream_rng(seed, Stream::Beacon),
        })
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 / PHYSICS_RATE as f64
    }

    pub fn dt(&self) -> f64 {
        1.0 / PHYSICS_RATE as f64
    }

    /// Count of rejected non-finite robot commands.
    pub fn faults(&self) -> u32 {
        self.faults
    }

    pub fn leader(&self) -> Option<&Agent> {
        self.agents.iter().find(|a| a.carries_beacon)
    }

    fn leader_mut(&mut self) -> Option<&mut Agent> {
        self.agents.iter_mut().find(|a| a.carries_beacon)
    }

    /// Body-frame reference velocity for the locomotion model.
    pub fn command_robot(&mut self, cmd: Vector3<f64>) {
        if !self.robot.set_command(cmd, &self.robot_config) {
            self.faults += 1;
            log::warn!("non-finite robot command at t={:.3}; zeroed", self.time());
        }
    }

    /// Overrides the leader's scripted motion from the next tick on.
    pub fn apply_leader_command(&mut self, cmd: LeaderCommand) -> Result<(), SimError> {
        if let LeaderCommand::Velocity(v) = cmd {
            let speed = v.norm();
            if !speed.is_finite() || speed > MAX_AGENT_SPEED {
                return Err(SimError::CommandRange(speed));
            }
        }
        let leader = self.leader_mut().ok_or(SimError::NoLeader)?;
        leader.command = Some(cmd);
        Ok(())
    }

    /// Hands the leader back to its scripted motion.
    pub fn release_leader(&mut self) -> Result<(), SimError> {
        self.leader_mut().ok_or(SimError::NoLeader)?.command = None;
        Ok(())
    }

    /// Advances the world by `dt`, optionally applying a leader command first.
    pub fn step_world(&mut self, dt: f64, steering: Option<LeaderCommand>) -> Result<(), SimError> {
        if !(dt > 0.0 && dt <= 0.02) {
            return Err(SimError::TimeStep(dt));
        }
        if let Some(cmd) = steering {
            self.apply_leader_command(cmd)?;
        }
        let t = self.time();
        for a in &mut self.agents {
            a.step(&self.world, t, dt);
        }
        self.robot.step(dt, &self.robot_config, &self.world);
        Ok(())
    }

    /// One physics tick at the fixed rate.
    pub fn step(&mut self) {
        let dt = self.dt();
        self.step_world(dt, None).expect("fixed physics step is in range");
        self.tick += 1;
    }

    pub fn capsules(&self) -> Vec<Capsule> {
        self.agents.iter().map(|a| a.capsule()).collect()
    }

    pub fn lidar_scan(&mut self) -> LidarScan {
        let capsules = self.capsules();
        simulate_lidar(
            &self.world,
            &capsules,
            &self.robot.pose,
            &self.sensors.lidar,
            &self.lidar_dirs,
            self.time(),
            Some(&mut self.rng_lidar),
        )
    }

    pub fn camera_detections(&mut self) -> Vec<DetectionBox> {
        simulate_cameras(&self.world, &self.agents, &self.robot.pose, &self.sensors.cameras, self.time(), &mut self.rng_cameras)
    }

    pub fn beacon_position(&self) -> Option<Point3<f64>> {
        self.leader().map(|l| {
            Point3::new(l.position.x, l.position.y, self.sensors.beacon.array_height + l.beacon_elevation)
        })
    }

    pub fn beacon_snapshot(&mut self) -> Option<IqSnapshot> {
        let beacon = self.beacon_position()?;
        Some(simulate_beacon_iq(
            &self.world,
            &self.geometry,
            &self.robot.pose,
            &beacon,
            &self.sensors.beacon,
            self.time(),
            &mut self.rng_beacon,
        ))
    }

    pub fn beacon_bearing(&self) -> Option<f64> {
        self.leader().map(|l| self.robot.pose.bearing_to(l.position))
    }

    pub fn truth(&self) -> TruthRecord {
        TruthRecord {
            t: self.time(),
            robot: self.robot.pose,
            agents: self
                .agents
                .iter()
                .map(|a| AgentTruth {
                    id: a.id,
                    x: a.position.x,
                    y: a.position.y,
                    vx: a.velocity.x,
                    vy: a.velocity.y,
                    heading: a.heading,
                    leader: a.carries_beacon,
                })
                .collect(),
            beacon_bearing: self.beacon_bearing().unwrap_or(f64::NAN),
        }
    }

    /// Smallest footprint clearance of the robot to static geometry and
    /// agent bodies.
    pub fn robot_clearance(&self) -> f64 {
        let p = self.robot.pose.position();
        let r = self.robot_config.radius;
        let agents = self
            .agents
            .iter()
            .map(|a| (a.position - p).norm() - r - super::agents::BODY_RADIUS)
            .fold(f64::INFINITY, f64::min);
        self.world.footprint_clearance(&p, r).min(agents)
    }

    pub fn agent_position(&self, id: u32) -> Option<Point2<f64>> {
        self.agents.iter().find(|a| a.id == id).map(|a| a.position)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_counts_are_exact() {
        for (rate, per_second) in [(200, 200), (50, 50), (15, 15), (10, 10), (5, 5)] {
            let n = (0..2000u64).filter(|&k| fires(k, rate)).count();
            assert_eq!(n, per_second * 10, "{rate} Hz");
        }
    }

    #[test]
    fn streams_are_independent() {
        use rand::Rng;
        let mut a = stream_rng(7, Stream::Lidar);
        let mut b = stream_rng(7, Stream::Beacon);
        assert_ne!(a.random::<u64>(), b.random::<u64>());
    }
}
