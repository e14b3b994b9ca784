use nalgebra::{Point2, Vector2};

use super::world::{Capsule, WorldModel};

pub const BODY_RADIUS: f64 = 0.25;
pub const BODY_HEIGHT: f64 = 1.75;
pub const MAX_AGENT_SPEED: f64 = 2.5;

/// External override of the leader's motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeaderCommand {
    /// World-frame velocity in m/s.
    Velocity(Vector2<f64>),
    /// Walk to a point at the agent's nominal speed, then stop.
    Waypoint(Point2<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgentMotion {
    Scripted {
        waypoints: Vec<Point2<f64>>,
        next: usize,
        looped: bool,
        /// Simulation time before which the agent waits at its start.
        start_time: f64,
    },
    /// Stationary until steered.
    Interactive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: u32,
    pub position: Point2<f64>,
    pub velocity: Vector2<f64>,
    pub heading: f64,
    pub carries_beacon: bool,
    /// Beacon height above the RF array plane.
    pub beacon_elevation: f64,
    pub speed: f64,
    pub motion: AgentMotion,
    pub command: Option<LeaderCommand>,
}

impl Agent {
    pub fn scripted(id: u32, start: Point2<f64>, waypoints: Vec<Point2<f64>>, speed: f64) -> Self {
        let heading = waypoints.first().map(|w| (w - start).y.atan2((w - start).x)).unwrap_or(0.0);
        Self {
            id,
            position: start,
            velocity: Vector2::zeros(),
            heading,
            carries_beacon: false,
            beacon_elevation: 0.0,
            speed,
            motion: AgentMotion::Scripted { waypoints, next: 0, looped: false, start_time: 0.0 },
            command: None,
        }
    }

    pub fn with_beacon(mut self) -> Self {
        self.carries_beacon = true;
        self
    }

    pub fn capsule(&self) -> Capsule {
        Capsule { base: self.position, radius: BODY_RADIUS, height: BODY_HEIGHT }
    }

    fn desired_velocity(&mut self, t: f64, dt: f64) -> Vector2<f64> {
        let toward = |pos: Point2<f64>, goal: Point2<f64>, speed: f64| {
            let d = goal - pos;
            let n = d.norm();
            if n < 1e-12 {
                Vector2::zeros()
            } else {
                // land exactly on the goal instead of overshooting it
                d / n * speed.min(n / dt)
            }
        };
        match self.command {
            Some(LeaderCommand::Velocity(v)) => return v,
            Some(LeaderCommand::Waypoint(w)) => return toward(self.position, w, self.speed),
            None => {}
        }
        match &mut self.motion {
            AgentMotion::Interactive => Vector2::zeros(),
            AgentMotion::Scripted { waypoints, next, looped, start_time } => {
                if t < *start_time || waypoints.is_empty() {
                    return Vector2::zeros();
                }
                if *next >= waypoints.len() {
                    if !*looped {
                        return Vector2::zeros();
                    }
                    *next = 0;
                }
                if (waypoints[*next] - self.position).norm() < 1e-9 {
                    *next += 1;
                    if *next >= waypoints.len() {
                        if !*looped {
                            return Vector2::zeros();
                        }
                        *next = 0;
                    }
                }
                toward(self.position, waypoints[*next], self.speed)
            }
        }
    }

    /// Advances the agent by one tick, sliding along static geometry.
    pub fn step(&mut self, world: &WorldModel, t: f64, dt: f64) {
        let mut v = self.desired_velocity(t, dt);
        let target = self.position + v * dt;
        let resolved = world.resolve_footprint(target, BODY_RADIUS);
        let n = resolved.contact_normal;
        if n != Vector2::zeros() {
            v -= n * v.dot(&n).min(0.0);
        }
        self.position = resolved.position;
        self.velocity = v;
        if v.norm() > 1e-6 {
            self.heading = v.y.atan2(v.x);
        }
    }
}
