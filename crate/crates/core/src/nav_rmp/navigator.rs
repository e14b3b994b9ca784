use nalgebra::{Matrix1, Point2, Point3, Vector1, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::attractors::{follow_goal_with_heading, goal_policy, leader_heading, yaw_policy, FollowConfig, GoalGains, YawGains};
use super::occupancy::{HierarchicalOccupancy, ObstacleCube, OccupancyConfig};
use super::policy::{combine, position_to_se2, pullback_to_se2, yaw_to_se2, PolicyOutput, Se2Policy};
use super::repulsors::{obstacle_policy, static_obstacle_policy, RepulsorConfig};
use crate::geometry::{Aabb3, Pose2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavConfig {
    pub follow: FollowConfig,
    pub goal: GoalGains,
    pub yaw: YawGains,
    pub static_obstacles: RepulsorConfig,
    pub dynamic_obstacles: RepulsorConfig,
    pub occupancy: OccupancyConfig,
    /// People boxes this close to the leader belief are the leader.
    pub leader_exclusion: f64,
    pub body_radius: f64,
    /// Height of the point the obstacle policies act on.
    pub reference_height: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub dynamic_horizon: f64,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            follow: FollowConfig::default(),
            goal: GoalGains::default(),
            yaw: YawGains::default(),
            static_obstacles: RepulsorConfig::static_default(),
            dynamic_obstacles: RepulsorConfig::dynamic_default(),
            occupancy: OccupancyConfig::default(),
            leader_exclusion: 0.6,
            body_radius: 0.35,
            reference_height: 0.4,
            v_max: 1.2,
            omega_max: 1.5,
            dynamic_horizon: 1.0,
        }
    }
}

impl NavConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.follow.validate()?;
        self.occupancy.validate()?;
        self.static_obstacles.validate("static_obstacles")?;
        self.dynamic_obstacles.validate("dynamic_obstacles")?;
        if !(self.v_max > 0.0 && self.omega_max > 0.0) {
            return Err("nav.v_max and nav.omega_max must be positive".into());
        }
        if !(self.goal.c > 0.0 && self.goal.metric > 0.0 && self.goal.alpha >= 0.0 && self.goal.beta >= 0.0) {
            return Err("nav.goal: c and metric must be positive, alpha and beta non-negative".into());
        }
        Ok(())
    }
}

/// What the navigator is steering toward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NavTarget {
    /// No leader: brake and stay.
    Hold,
    /// Tracked leader state.
    Follow { position: Point2<f64>, velocity: Vector2<f64> },
    /// Last known leader position after the track was lost.
    Approach(Point2<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolicyTrace {
    pub name: &'static str,
    pub accel: [f64; 3],
    pub metric_trace: f64,
}

impl PolicyTrace {
    fn new(name: &'static str, p: &Se2Policy) -> Self {
        Self { name, accel: [p.accel.x, p.accel.y, p.accel.z], metric_trace: p.metric.trace() }
    }
}

/// One navigation cycle's outcome; serialised into the nav log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NavStep {
    pub t: f64,
    pub goal: [f64; 3],
    pub policies: [PolicyTrace; 4],
    pub accel: [f64; 3],
    /// World-frame reference velocity `(vx, vy, ω)`.
    pub v_ref: [f64; 3],
    /// Body-frame command sent to the base.
    pub command: [f64; 3],
    pub cube_count: usize,
    #[serde(skip)]
    pub cubes: Vec<ObstacleCube>,
}

impl NavStep {
    pub fn command_vector(&self) -> Vector3<f64> {
        Vector3::from(self.command)
    }
}

/// Follow-set-point navigator integrating the resolved acceleration into a
/// velocity reference.
#[derive(Debug, Clone)]
pub struct Navigator {
    cfg: NavConfig,
    v_ref: Vector3<f64>,
    last_heading: Option<f64>,
    smoothed_velocity: Option<Vector2<f64>>,
}

impl Navigator {
    pub fn new(cfg: NavConfig) -> Self {
        Self { cfg, v_ref: Vector3::zeros(), last_heading: None, smoothed_velocity: None }
    }

    pub fn config(&self) -> &NavConfig {
        &self.cfg
    }

    pub fn v_ref(&self) -> Vector3<f64> {
        self.v_ref
    }

    pub fn reference_point(&self, pose: &Pose2) -> Point3<f64> {
        Point3::new(pose.x, pose.y, self.cfg.reference_height)
    }

    /// Goal position and look-at point for a target. Heading and lookahead
    /// use a low-passed leader velocity; the track's velocity jitters while
    /// the visible surface changes.
    pub fn goal_for(&mut self, pose: &Pose2, target: NavTarget, dt: f64) -> (Point2<f64>, f64, Option<Point2<f64>>) {
        if !matches!(target, NavTarget::Follow { .. }) {
            self.smoothed_velocity = None;
        }
        match target {
            NavTarget::Hold => (pose.position(), pose.yaw, None),
            NavTarget::Follow { position, velocity } => {
                let tau = self.cfg.follow.heading_smoothing;
                let smoothed = match self.smoothed_velocity {
                    Some(prev) if tau > 0.0 => prev + (velocity - prev) * (dt / (tau + dt)),
                    _ => velocity,
                };
                self.smoothed_velocity = Some(smoothed);
                let last = self.last_heading.unwrap_or_else(|| pose.bearing_to(position));
                let heading = leader_heading(&smoothed, last, &self.cfg.follow);
                let g = follow_goal_with_heading(position.coords, smoothed, heading, &self.cfg.follow);
                self.last_heading = Some(heading);
                (g.position(), g.yaw, Some(position))
            }
            NavTarget::Approach(p) => {
                let d = p - pose.position();
                let n = d.norm();
                let fd = self.cfg.follow.follow_distance;
                let goal = if n > fd { p - d * (fd / n) } else { pose.position() };
                (goal, d.y.atan2(d.x), Some(p))
            }
        }
    }

    /// Full cycle: map query, four policies, resolve, integrate.
    pub fn cycle(&mut self, t: f64, pose: &Pose2, map: &HierarchicalOccupancy, people: &[Aabb3], target: NavTarget, dt: f64) -> NavStep {
        let p3 = self.reference_point(pose);
        let v3 = Vector3::new(self.v_ref.x, self.v_ref.y, 0.0);
        let cubes = map.query_obstacle_cubes(&p3, self.cfg.occupancy.query_radius);
        let (goal, goal_yaw, look_at) = self.goal_for(pose, target, dt);

        let goal_p = position_to_se2(&goal_policy(&pose.position(), &self.v_ref.xy(), &goal, &self.cfg.goal));
        let yaw = match look_at {
            Some(l) if (l - pose.position()).norm() > self.cfg.yaw.min_range => yaw_policy(pose, self.v_ref.z, &l, &self.cfg.yaw),
            _ => PolicyOutput::new(Vector1::new(-self.cfg.yaw.beta * self.v_ref.z), Matrix1::new(self.cfg.yaw.metric)),
        };
        let yaw_p = yaw_to_se2(&yaw);
        let static_p = pullback_to_se2(&static_obstacle_policy(&p3, &v3, &cubes, self.cfg.body_radius, &self.cfg.static_obstacles));
        let dynamic_p = pullback_to_se2(&obstacle_policy(&p3, &v3, people, self.cfg.body_radius, &self.cfg.dynamic_obstacles));

        let resolved = combine(&[goal_p, yaw_p, static_p, dynamic_p]);
        let a = if resolved.accel.iter().all(|v| v.is_finite()) {
            resolved.accel
        } else {
            log::warn!("t={t:.2}: non-finite resolved acceleration; braking");
            -self.v_ref / dt.max(1e-3)
        };
        self.integrate(&a, dt);
        let body = pose.rotate_to_body(self.v_ref.xy());
        NavStep {
            t,
            goal: [goal.x, goal.y, goal_yaw],
            policies: [
                PolicyTrace::new("goal", &goal_p),
                PolicyTrace::new("yaw", &yaw_p),
                PolicyTrace::new("static", &static_p),
                PolicyTrace::new("dynamic", &dynamic_p),
            ],
            accel: [a.x, a.y, a.z],
            v_ref: [self.v_ref.x, self.v_ref.y, self.v_ref.z],
            command: [body.x, body.y, self.v_ref.z],
            cube_count: cubes.len(),
            cubes,
        }
    }

    fn integrate(&mut self, a: &Vector3<f64>, dt: f64) {
        let mut v = self.v_ref + a * dt;
        let planar = v.xy().norm();
        if planar > self.cfg.v_max {
            let s = self.cfg.v_max / planar;
            v.x *= s;
            v.y *= s;
        }
        v.z = v.z.clamp(-self.cfg.omega_max, self.cfg.omega_max);
        self.v_ref = v;
    }

    /// Forgets the reference velocity, e.g. after a fault.
    pub fn stop(&mut self) {
        self.v_ref = Vector3::zeros();
    }
}
