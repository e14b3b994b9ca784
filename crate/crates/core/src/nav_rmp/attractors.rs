use std::f64::consts::PI;

use nalgebra::{Matrix1, Matrix2, Point2, Vector1, Vector2};
use serde::{Deserialize, Serialize};

use super::policy::PolicyOutput;
use crate::geometry::{wrap_angle_upper, Pose2};
use crate::leader_tracker::LeaderBelief;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FollowConfig {
    pub follow_distance: f64,
    /// Offset direction relative to the leader's heading; π is behind.
    pub follow_bearing: f64,
    pub lookahead: f64,
    /// Below this speed the last valid heading is kept.
    pub min_heading_speed: f64,
    /// Time constant of the low-pass on the velocity used for heading, s.
    pub heading_smoothing: f64,
}

impl Default for FollowConfig {
    fn default() -> Self {
        Self {
            follow_distance: 1.5,
            follow_bearing: PI,
            lookahead: 0.5,
            min_heading_speed: 0.3,
            heading_smoothing: 1.0,
        }
    }
}

impl FollowConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.follow_distance >= 0.5) {
            return Err("follow.follow_distance must be at least 0.5 m".into());
        }
        if !(self.lookahead >= 0.0) {
            return Err("follow.lookahead must be non-negative".into());
        }
        if !(self.heading_smoothing >= 0.0) {
            return Err("follow.heading_smoothing must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FollowGoal {
    pub x: f64,
    pub y: f64,
    /// Yaw that faces the leader from the goal.
    pub yaw: f64,
    /// Leader heading used for the offset.
    pub heading: f64,
}

impl FollowGoal {
    pub fn position(&self) -> Point2<f64> {
        Point2::new(self.x, self.y)
    }
}

/// Leader heading from velocity, falling back to `last_heading` when slow.
pub fn leader_heading(velocity: &Vector2<f64>, last_heading: f64, cfg: &FollowConfig) -> f64 {
    if velocity.norm() > cfg.min_heading_speed {
        velocity.y.atan2(velocity.x)
    } else {
        last_heading
    }
}

/// Set-point at the configured offset from the leader's predicted position.
pub fn follow_goal_from(position: Vector2<f64>, velocity: Vector2<f64>, last_heading: f64, cfg: &FollowConfig) -> FollowGoal {
    follow_goal_with_heading(position, velocity, leader_heading(&velocity, last_heading, cfg), cfg)
}

/// Same with the heading already decided.
pub fn follow_goal_with_heading(position: Vector2<f64>, velocity: Vector2<f64>, heading: f64, cfg: &FollowConfig) -> FollowGoal {
    let ahead = position + velocity * cfg.lookahead;
    let dir = heading + cfg.follow_bearing;
    let goal = ahead + Vector2::new(dir.cos(), dir.sin()) * cfg.follow_distance;
    let to_leader = ahead - goal;
    FollowGoal { x: goal.x, y: goal.y, yaw: to_leader.y.atan2(to_leader.x), heading }
}

pub fn compute_follow_goal(belief: &LeaderBelief, last_heading: f64, cfg: &FollowConfig) -> FollowGoal {
    follow_goal_from(belief.position, belief.velocity, last_heading, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GoalGains {
    pub alpha: f64,
    pub beta: f64,
    /// Soft-normalisation length.
    pub c: f64,
    pub metric: f64,
}

impl Default for GoalGains {
    fn default() -> Self {
        Self { alpha: 4.0, beta: 3.0, c: 0.2, metric: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct YawGains {
    pub alpha: f64,
    pub beta: f64,
    pub metric: f64,
    /// Targets closer than this give no yaw preference.
    pub min_range: f64,
}

impl Default for YawGains {
    fn default() -> Self {
        Self { alpha: 2.0, beta: 2.0, metric: 1.0, min_range: 0.1 }
    }
}

/// `d / (‖d‖ + c)`.
pub fn soft_normalize(d: &Vector2<f64>, c: f64) -> Vector2<f64> {
    d / (d.norm() + c)
}

/// Position attractor with velocity damping.
pub fn goal_policy(position: &Point2<f64>, velocity: &Vector2<f64>, goal: &Point2<f64>, gains: &GoalGains) -> PolicyOutput<2> {
    let accel = soft_normalize(&(goal - position), gains.c) * gains.alpha - velocity * gains.beta;
    PolicyOutput::new(accel, Matrix2::identity() * gains.metric)
}

/// Heading attractor toward the bearing of `target` from the robot.
pub fn yaw_policy(pose: &Pose2, omega: f64, target: &Point2<f64>, gains: &YawGains) -> PolicyOutput<1> {
    let d = target - pose.position();
    if d.norm() <= gains.min_range {
        return PolicyOutput::zero();
    }
    let err = wrap_angle_upper(d.y.atan2(d.x) - pose.yaw);
    PolicyOutput::new(Vector1::new(gains.alpha * err - gains.beta * omega), Matrix1::new(gains.metric))
}
