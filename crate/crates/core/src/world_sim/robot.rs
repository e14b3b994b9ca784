use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::world::WorldModel;
use crate::geometry::{wrap_angle, Pose2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    /// First-order velocity lag of the locomotion controller.
    pub lag_tau: f64,
    pub v_max: f64,
    pub omega_max: f64,
    /// Footprint disc radius.
    pub radius: f64,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            lag_tau: 0.3,
            v_max: 1.2,
            omega_max: 1.5,
            radius: 0.35,
        }
    }
}

/// Planar robot. Velocity and command are body-frame `(vx, vy, ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub pose: Pose2,
    pub velocity: Vector3<f64>,
    pub command: Vector3<f64>,
}

impl RobotState {
    pub fn at(pose: Pose2) -> Self {
        Self {
            pose,
            velocity: Vector3::zeros(),
            command: Vector3::zeros(),
        }
    }

    /// Stores a clamped body-frame reference velocity. A non-finite
    /// command is replaced by zero and reported as `false`.
    pub fn set_command(&mut self, cmd: Vector3<f64>, cfg: &RobotConfig) -> bool {
        if !cmd.iter().all(|c| c.is_finite()) {
            self.command = Vector3::zeros();
            return false;
        }
        self.command = clamp_velocity(cmd, cfg);
        true
    }

    /// World-frame planar velocity.
    pub fn world_velocity(&self) -> Vector2<f64> {
        self.pose.rotate_to_world(self.velocity.xy())
    }

    /// Integrates the lagged velocity and pose over `dt`; the lag is solved
    /// exactly so a held command gives the analytic step response.
    pub fn step(&mut self, dt: f64, cfg: &RobotConfig, world: &WorldModel) {
        let decay = (-dt / cfg.lag_tau).exp();
        let v0 = self.velocity;
        let c = self.command;
        let v1 = c + (v0 - c) * decay;
        let travelled = c * dt + (v0 - c) * (cfg.lag_tau * (1.0 - decay));
        let mid_yaw = self.pose.yaw + 0.5 * travelled.z;
        let (s, co) = mid_yaw.sin_cos();
        let dx = co * travelled.x - s * travelled.y;
        let dy = s * travelled.x + co * travelled.y;
        let target = self.pose.position() + Vector2::new(dx, dy);
        let resolved = world.resolve_footprint(target, cfg.radius);
        self.pose = Pose2::new(resolved.position.x, resolved.position.y, wrap_angle(self.pose.yaw + travelled.z));
        self.velocity = v1;
        let n = resolved.contact_normal;
        if n != Vector2::zeros() {
            let mut vw = self.world_velocity();
            vw -= n * vw.dot(&n).min(0.0);
            let vb = self.pose.rotate_to_body(vw);
            self.velocity = Vector3::new(vb.x, vb.y, v1.z);
        }
    }
}

pub fn clamp_velocity(v: Vector3<f64>, cfg: &RobotConfig) -> Vector3<f64> {
    let lin = v.xy();
    let n = lin.norm();
    let lin = if n > cfg.v_max { lin * (cfg.v_max / n) } else { lin };
    Vector3::new(lin.x, lin.y, v.z.clamp(-cfg.omega_max, cfg.omega_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point2;

    #[test]
    fn step_response_matches_first_order_lag() {
        let world = WorldModel::empty(Point2::new(-20.0, -20.0), Point2::new(20.0, 20.0));
        let cfg = RobotConfig::default();
        let mut r = RobotState::at(Pose2::default());
        r.set_command(Vector3::new(1.0, 0.0, 0.0), &cfg);
        let dt = 0.005;
        let mut last = 0.0;
        for k in 1..=600 {
            r.step(dt, &cfg, &world);
            let t = k as f64 * dt;
            let expected = t - cfg.lag_tau * (1.0 - (-t / cfg.lag_tau).exp());
            assert!((r.pose.x - expected).abs() < 1e-9);
            assert!(r.pose.x > last);
            last = r.pose.x;
        }
        // 3 s = 10 time constants: travelled ≈ elapsed - tau
        assert!((r.pose.x - (3.0 - 0.3)).abs() < 1e-4);
    }

    #[test]
    fn nan_command_is_zeroed() {
        let cfg = RobotConfig::default();
        let mut r = RobotState::at(Pose2::default());
        assert!(!r.set_command(Vector3::new(f64::NAN, 0.0, 0.0), &cfg));
        assert_eq!(r.command, Vector3::zeros());
    }

    #[test]
    fn command_is_clamped() {
        let cfg = RobotConfig::default();
        let mut r = RobotState::at(Pose2::default());
        r.set_command(Vector3::new(3.0, 4.0, -9.0), &cfg);
        assert!((r.command.xy().norm() - 1.2).abs() < 1e-12);
        assert_eq!(r.command.z, -1.5);
    }
}
