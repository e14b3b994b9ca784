use std::f64::consts::TAU;

use nalgebra::Point3;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::agents::{Agent, BODY_RADIUS};
use super::world::{ray_capsule, WorldModel};
use crate::geometry::{wrap_angle, Pose2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    /// Cameras evenly spaced around the body, camera 0 facing forward.
    pub count: usize,
    pub fov_deg: f64,
    pub max_range: f64,
    pub bearing_noise_deg: f64,
    pub false_negative: f64,
    pub mount_height: f64,
    /// Height of the torso point used for the visibility test.
    pub torso_height: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            count: 4,
            fov_deg: 90.0,
            max_range: 8.0,
            bearing_noise_deg: 1.0,
            false_negative: 0.05,
            mount_height: 0.6,
            torso_height: 1.2,
        }
    }
}

/// Person detection reduced to a bearing and an angular width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionBox {
    pub camera_id: usize,
    /// Robot-frame bearing.
    pub bearing: f64,
    pub angular_extent: f64,
    /// Ground-truth identity; only metrics may look at it.
    pub person_id: u32,
    pub timestamp: f64,
}

impl CameraConfig {
    fn camera_yaw(&self, k: usize) -> f64 {
        TAU * k as f64 / self.count as f64
    }

    /// Camera whose half-open field of view `[-fov/2, fov/2)` holds the
    /// body-frame bearing, lowest index first.
    pub fn camera_for(&self, bearing: f64) -> Option<usize> {
        let half = self.fov_deg.to_radians() / 2.0;
        (0..self.count).find(|&k| {
            let rel = wrap_angle(bearing - self.camera_yaw(k));
            rel >= -half && rel < half
        })
    }

    fn clamp_to_fov(&self, bearing: f64, k: usize) -> f64 {
        let half = self.fov_deg.to_radians() / 2.0;
        let rel = wrap_angle(bearing - self.camera_yaw(k)).clamp(-half, half - 1e-9);
        wrap_angle(self.camera_yaw(k) + rel)
    }
}

/// Geometric detector: every visible agent in range yields one box. Two
/// random draws are consumed per agent in range so the stream stays aligned
/// regardless of outcomes.
pub fn simulate_cameras<R: Rng>(
    world: &WorldModel,
    agents: &[Agent],
    pose: &Pose2,
    cfg: &CameraConfig,
    timestamp: f64,
    rng: &mut R,
) -> Vec<DetectionBox> {
    let eye = Point3::new(pose.x, pose.y, cfg.mount_height);
    let noise = Normal::new(0.0, cfg.bearing_noise_deg.to_radians().max(0.0)).unwrap();
    let mut out = Vec::new();
    for (i, agent) in agents.iter().enumerate() {
        let range = (agent.position - pose.position()).norm();
        if range > cfg.max_range || range <= BODY_RADIUS {
            continue;
        }
        let miss = rng.random::<f64>() < cfg.false_negative;
        let jitter = noise.sample(rng);
        let torso = Point3::new(agent.position.x, agent.position.y, cfg.torso_height);
        let dist = (torso - eye).norm();
        let dir = (torso - eye) / dist;
        let occluded = world.segment_blocked(&eye, &torso)
            || agents.iter().enumerate().any(|(j, other)| {
                j != i && ray_capsule(&eye, &dir, &other.capsule()).is_some_and(|t| t < dist - BODY_RADIUS)
            });
        if miss || occluded {
            continue;
        }
        let truth = pose.bearing_to(agent.position);
        let Some(camera_id) = cfg.camera_for(truth) else {
            continue;
        };
        out.push(DetectionBox {
            camera_id,
            bearing: cfg.clamp_to_fov(truth + jitter, camera_id),
            angular_extent: 2.0 * (BODY_RADIUS / range).atan(),
            person_id: agent.id,
            timestamp,
        });
    }
    out
}
