use std::time::Instant;

use nalgebra::{Point2, Point3, Vector2, Vector3};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::metrics::{compute_metrics, AoaLogRow, RunLogs, RunMetrics};
use super::scenario::Scenario;
use super::RunnerError;
use crate::geometry::{angle_distance, Aabb3, Pose2};
use crate::leader_fusion::{extract_foreground_cluster, match_detection_to_aoa, LeaderSelector};
use crate::leader_tracker::{LeaderTracker, TrackerStatus, Wedge};
use crate::nav_rmp::{DynamicObstacleBuffer, HierarchicalOccupancy, NavStep, NavTarget, Navigator};
use crate::rf_array::{AoaReading, AoaSensor, ArrayGeometry};
use crate::world_sim::{fires, stream_rng, DetectionBox, LeaderCommand, LidarScan, SimError, Simulation, Stream, PHYSICS_RATE};

pub const NAV_RATE: u32 = 50;

/// AoA readings older than this are not used to pick the leader.
const AOA_MAX_AGE: f64 = 0.5;
/// Margin added around people clusters before they are kept out of the map.
const PEOPLE_MARGIN: f64 = 0.15;
/// Half-width of the box kept out of the map around the leader belief.
const LEADER_HALF_WIDTH: f64 = 0.45;
/// Slack added to each side of a detection wedge, rad.
const WEDGE_MARGIN: f64 = 0.1;

/// Input arriving from outside the simulation (steering endpoint).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExternalCommand {
    Steer(Vector2<f64>),
    Interactive,
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub bench_nav: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchReport {
    pub cycles: usize,
    pub median_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
}

impl BenchReport {
    pub fn from_samples(ms: &[f64]) -> Option<Self> {
        if ms.is_empty() {
            return None;
        }
        let mut s = ms.to_vec();
        s.sort_by(f64::total_cmp);
        let q = |p: f64| s[((s.len() - 1) as f64 * p).round() as usize];
        Some(Self { cycles: s.len(), median_ms: q(0.5), p95_ms: q(0.95), max_ms: s[s.len() - 1] })
    }
}

/// Per-stage invocation counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StageCounts {
    pub physics: u64,
    pub nav: u64,
    pub cameras: u64,
    pub lidar: u64,
    pub tracker: u64,
    pub aoa: u64,
}

/// All stages wired together on the simulation clock. One `step` is one
/// physics tick; stages due on that tick run first, in the fixed order
/// sensors, fusion and tracking, navigation, then physics advances.
#[derive(Debug)]
pub struct Pipeline {
    scenario: Scenario,
    seed: u64,
    pub sim: Simulation,
    aoa: AoaSensor,
    tracker: LeaderTracker,
    selector: LeaderSelector,
    navigator: Navigator,
    map: HierarchicalOccupancy,
    people: DynamicObstacleBuffer,
    ransac_rng: ChaCha8Rng,
    detections: Vec<DetectionBox>,
    /// Robot yaw when `detections` were taken.
    detection_yaw: f64,
    last_aoa: Option<AoaReading>,
    lost_target: Option<Point2<f64>>,
    last_nav: Option<NavStep>,
    logs: RunLogs,
    counts: StageCounts,
    bench: bool,
    nav_ms: Vec<f64>,
    end_tick: u64,
}

impl Pipeline {
    pub fn new(scenario: Scenario, options: RunOptions) -> Result<Self, RunnerError> {
        scenario.validate()?;
        let seed = options.seed.unwrap_or(scenario.seed);
        let aoa = AoaSensor::new(scenario.aoa.clone()).map_err(|e| RunnerError::Invalid { field: "aoa".into(), message: e.to_string() })?;
        let geometry = ArrayGeometry::new(scenario.aoa.ring_count, scenario.aoa.carrier_freq)
            .map_err(|e| RunnerError::Invalid { field: "aoa".into(), message: e.to_string() })?;
        let agents = scenario.agents.iter().map(|a| a.to_agent()).collect();
        let sim = Simulation::new(
            scenario.world.clone(),
            agents,
            scenario.robot.start,
            scenario.robot.config.clone(),
            scenario.sensors.clone(),
            geometry,
            seed,
        )
        .map_err(|e| RunnerError::Invalid { field: "world".into(), message: e.to_string() })?;
        let mut bounds = scenario.world.bounds;
        bounds.min.z = bounds.min.z.min(0.0);
        let map = HierarchicalOccupancy::new(&bounds, scenario.nav.occupancy.clone());
        Ok(Self {
            seed,
            aoa,
            tracker: LeaderTracker::new(scenario.tracker.clone()),
            selector: LeaderSelector::default(),
            navigator: Navigator::new(scenario.nav.clone()),
            map,
            people: DynamicObstacleBuffer::new(scenario.nav.dynamic_horizon),
            ransac_rng: stream_rng(seed, Stream::Ransac),
            detections: Vec::new(),
            detection_yaw: 0.0,
            last_aoa: None,
            lost_target: None,
            last_nav: None,
            logs: RunLogs::default(),
            counts: StageCounts::default(),
            bench: options.bench_nav,
            nav_ms: Vec::new(),
            end_tick: (scenario.duration * PHYSICS_RATE as f64).round() as u64,
            sim,
            scenario,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn time(&self) -> f64 {
        self.sim.time()
    }

    pub fn is_finished(&self) -> bool {
        self.sim.tick() >= self.end_tick
    }

    pub fn tracker(&self) -> &LeaderTracker {
        &self.tracker
    }

    pub fn navigator(&self) -> &Navigator {
        &self.navigator
    }

    pub fn map(&self) -> &HierarchicalOccupancy {
        &self.map
    }

    pub fn last_nav(&self) -> Option<&NavStep> {
        self.last_nav.as_ref()
    }

    pub fn last_aoa(&self) -> Option<&AoaReading> {
        self.last_aoa.as_ref()
    }

    pub fn logs(&self) -> &RunLogs {
        &self.logs
    }

    pub fn counts(&self) -> StageCounts {
        self.counts
    }

    pub fn bench_report(&self) -> Option<BenchReport> {
        BenchReport::from_samples(&self.nav_ms)
    }

    /// Applies an external command before the next tick.
    pub fn apply(&mut self, cmd: ExternalCommand) -> Result<(), SimError> {
        match cmd {
            ExternalCommand::Steer(v) => self.sim.apply_leader_command(LeaderCommand::Velocity(v)),
            ExternalCommand::Interactive => self.sim.apply_leader_command(LeaderCommand::Velocity(Vector2::zeros())),
            ExternalCommand::Scripted => self.sim.release_leader(),
        }
    }

    pub fn step(&mut self) {
        let k = self.sim.tick();
        let t = self.sim.time();
        self.logs.truth.push(self.sim.truth());
        let rates = &self.scenario.sensors;

        // sensors
        if fires(k, rates.camera_rate) {
            self.detections = self.sim.camera_detections();
            self.detection_yaw = self.sim.robot.pose.yaw;
            self.counts.cameras += 1;
        }
        let scan = fires(k, rates.lidar_rate).then(|| self.sim.lidar_scan());
        let aoa_tick = fires(k, rates.beacon_rate);
        if aoa_tick {
            self.counts.aoa += 1;
            if let Some(snap) = self.sim.beacon_snapshot() {
                match self.aoa.process(&snap) {
                    Ok(reading) => {
                        self.logs.aoa.push(AoaLogRow {
                            t,
                            azimuth: reading.estimate.azimuth,
                            confidence: reading.estimate.confidence,
                            low_confidence: reading.estimate.low_confidence,
                            raw_azimuth: reading.raw.azimuth,
                            truth: self.sim.beacon_bearing().unwrap_or(f64::NAN),
                        });
                        self.tracker.record_aoa(&reading.estimate, &self.sim.robot.pose);
                        self.last_aoa = Some(reading);
                    }
                    Err(e) => log::warn!("t={t:.2}: AoA cycle failed: {e}"),
                }
            }
        }

        // fusion and tracking
        if let Some(scan) = scan {
            self.counts.lidar += 1;
            self.perceive(t, &scan, aoa_tick);
        }

        // navigation
        if fires(k, NAV_RATE) {
            self.counts.nav += 1;
            self.navigate(t);
        }

        self.sim.step();
        self.counts.physics += 1;
    }

    fn perceive(&mut self, t: f64, scan: &LidarScan, aoa_tick: bool) {
        let pose = self.sim.robot.pose;
        let mount = self.scenario.sensors.lidar.mount_height;
        let scan_world = scan.to_world(&pose, mount);

        let rotate = pose.yaw - self.detection_yaw;
        let mut people: Vec<(DetectionBox, Aabb3)> = Vec::new();
        for d in &self.detections {
            let mut det = *d;
            det.bearing -= rotate;
            if let Some(h) = extract_foreground_cluster(&det, scan, &pose, mount, t, &self.scenario.fusion) {
                if let Some(b) = Aabb3::from_points(&h.points) {
                    people.push((*d, b));
                }
            }
        }
        // whole columns: low returns off legs must not be left behind as obstacles
        let mut excluded: Vec<Aabb3> = people
            .iter()
            .map(|(_, b)| {
                let g = b.inflated(PEOPLE_MARGIN);
                Aabb3::new(Point3::new(g.min.x, g.min.y, -1.0), Point3::new(g.max.x, g.max.y, 3.0))
            })
            .collect();
        if let Some(b) = self.tracker.belief().filter(|_| self.tracker.status().is_active()) {
            excluded.push(Aabb3::new(
                Point3::new(b.position.x - LEADER_HALF_WIDTH, b.position.y - LEADER_HALF_WIDTH, -1.0),
                Point3::new(b.position.x + LEADER_HALF_WIDTH, b.position.y + LEADER_HALF_WIDTH, 3.0),
            ));
        }
        self.map.insert_scan(&scan_world, &scan.misses_to_world(&pose), &Point3::new(pose.x, pose.y, mount), &excluded);
        for (_, b) in &people {
            self.people.push(t, *b);
        }
        self.people.prune(t);

        if self.tracker.status().is_active() {
            self.counts.tracker += 1;
            let wedge = self.leader_wedge(&pose);
            self.tracker.cycle(t, &scan_world, wedge.as_ref(), &mut self.ransac_rng);
            if aoa_tick {
                self.tracker.check_divergence(t);
            }
        } else if self.tracker.status() == TrackerStatus::Uninitialized {
            self.try_acquire(t, scan, &pose, mount);
        }

        self.logs.tracker.push(self.tracker.record(t));
        if self.tracker.status() == TrackerStatus::Diverged {
            self.lost_target = self.tracker.last_known().map(Point2::from);
            self.tracker.reset();
            self.selector.clear();
        }
    }

    /// Bearing wedge of the fresh detection covering the believed leader,
    /// which keeps association off nearby static structure.
    fn leader_wedge(&self, pose: &Pose2) -> Option<Wedge> {
        let b = self.tracker.belief()?;
        let to_leader = b.position - pose.position().coords;
        let bearing = to_leader.y.atan2(to_leader.x);
        self.detections
            .iter()
            .map(|d| (angle_distance(self.detection_yaw + d.bearing, bearing), d))
            .filter(|(off, d)| *off <= d.angular_extent / 2.0 + WEDGE_MARGIN)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, d)| Wedge { apex: pose.position().coords, bearing: self.detection_yaw + d.bearing, half_width: d.angular_extent / 2.0 + WEDGE_MARGIN })
    }

    fn try_acquire(&mut self, t: f64, scan: &LidarScan, pose: &Pose2, mount: f64) {
        let Some(reading) = self.last_aoa.filter(|r| t - r.estimate.timestamp <= AOA_MAX_AGE) else {
            return;
        };
        let Some(det) = match_detection_to_aoa(&self.detections, &reading.estimate, &self.scenario.fusion) else {
            return;
        };
        let mut det = det;
        det.bearing -= pose.yaw - self.detection_yaw;
        let Some(h) = extract_foreground_cluster(&det, scan, pose, mount, t, &self.scenario.fusion) else {
            return;
        };
        if let Some(belief) = self.selector.offer(h, &self.scenario.fusion, &self.scenario.tracker.ekf) {
            log::info!("t={t:.2}: leader confirmed at ({:.2}, {:.2})", belief.position.x, belief.position.y);
            self.tracker.initialize(belief);
            self.lost_target = None;
        }
    }

    fn navigate(&mut self, t: f64) {
        let pose = self.sim.robot.pose;
        let active = self.tracker.status().is_active();
        let belief = self.tracker.belief().filter(|_| active);
        let target = match belief {
            Some(b) => NavTarget::Follow { position: Point2::from(b.position), velocity: b.velocity },
            None => self.lost_target.map(NavTarget::Approach).unwrap_or(NavTarget::Hold),
        };
        // without a track, the pending hypothesis or last fix stands in for the leader
        let leader = belief
            .map(|b| Point2::from(b.position))
            .or_else(|| self.selector.pending().map(|h| Point2::new(h.position.x, h.position.y)))
            .or(self.lost_target);
        self.people.prune(t);
        let people = self.people.boxes_excluding(leader, self.scenario.nav.leader_exclusion);
        let dt = 1.0 / NAV_RATE as f64;
        let started = self.bench.then(Instant::now);
        let step = self.navigator.cycle(t, &pose, &self.map, &people, target, dt);
        if let Some(s) = started {
            self.nav_ms.push(s.elapsed().as_secs_f64() * 1e3);
        }
        self.sim.command_robot(step.command_vector());
        let mut logged = step.clone();
        logged.cubes = Vec::new();
        self.logs.nav.push(logged);
        self.last_nav = Some(step);
    }

    pub fn run_to_end(&mut self) {
        while !self.is_finished() {
            self.step();
        }
    }

    pub fn metrics(&self) -> Result<RunMetrics, RunnerError> {
        compute_metrics(
            &self.scenario.name,
            self.seed,
            &self.scenario.world,
            self.scenario.robot.config.radius,
            &self.scenario.nav.follow,
            &self.logs,
        )
    }

    /// Live state message for the steering endpoint.
    pub fn state_message(&self) -> Value {
        let truth = self.sim.truth();
        let robot = truth.robot;
        let nav = self.last_nav.as_ref();
        let arrows: Vec<Value> = nav
            .map(|n| {
                n.policies
                    .iter()
                    .map(|p| json!({"policy": p.name, "x": robot.x, "y": robot.y, "ax": p.accel[0], "ay": p.accel[1]}))
                    .collect()
            })
            .unwrap_or_default();
        let cubes: Vec<Value> = nav
            .map(|n| n.cubes.iter().map(|c| json!({"x": c.center.x, "y": c.center.y, "z": c.center.z, "side": c.side})).collect())
            .unwrap_or_default();
        let tracker = match self.tracker.belief() {
            Some(b) => json!({"status": self.tracker.status(), "px": b.position.x, "py": b.position.y}),
            None => json!({"status": self.tracker.status(), "px": null, "py": null}),
        };
        json!({
            "type": "state",
            "version": super::PROTOCOL_VERSION,
            "t": truth.t,
            "robot": {"x": robot.x, "y": robot.y, "yaw": robot.yaw},
            "agents": truth.agents,
            "goal": nav.map(|n| json!({"x": n.goal[0], "y": n.goal[1], "yaw": n.goal[2]})),
            "cubes": cubes,
            "policy_arrows": arrows,
            "aoa": self.last_aoa.map(|r| json!({"azimuth": r.estimate.azimuth, "confidence": r.estimate.confidence})),
            "tracker": tracker,
        })
    }

    /// Body-frame command currently held by the base.
    pub fn robot_command(&self) -> Vector3<f64> {
        self.sim.robot.command
    }
}
