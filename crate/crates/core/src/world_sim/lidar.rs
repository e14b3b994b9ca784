use nalgebra::{Point3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::world::{Capsule, WorldModel};
use crate::geometry::Pose2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarConfig {
    pub channels: usize,
    pub min_elevation_deg: f64,
    pub max_elevation_deg: f64,
    pub azimuth_step_deg: f64,
    pub mount_height: f64,
    pub min_range: f64,
    pub max_range: f64,
    /// Gaussian range noise; zero disables noise.
    pub range_noise: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            channels: 16,
            min_elevation_deg: -15.0,
            max_elevation_deg: 15.0,
            azimuth_step_deg: 0.4,
            mount_height: 0.5,
            min_range: 0.3,
            max_range: 50.0,
            range_noise: 0.015,
        }
    }
}

impl LidarConfig {
    pub fn azimuth_steps(&self) -> usize {
        (360.0 / self.azimuth_step_deg).round() as usize
    }

    /// Body-frame unit ray directions, azimuth-major.
    pub fn ray_directions(&self) -> Vec<Vector3<f64>> {
        let steps = self.azimuth_steps();
        let mut dirs = Vec::with_capacity(steps * self.channels);
        for a in 0..steps {
            let az = (a as f64 * self.azimuth_step_deg).to_radians();
            for c in 0..self.channels {
                let el = if self.channels == 1 {
                    0.0
                } else {
                    self.min_elevation_deg
                        + (self.max_elevation_deg - self.min_elevation_deg) * c as f64 / (self.channels - 1) as f64
                }
                .to_radians();
                dirs.push(Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()));
            }
        }
        dirs
    }
}

/// Point cloud in the sensor frame (x forward, z up, origin at the sensor).
#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan {
    pub points: Vec<Point3<f64>>,
    /// Unit directions of rays without a return in range, sensor frame.
    pub misses: Vec<Vector3<f64>>,
    pub timestamp: f64,
}

impl LidarScan {
    /// Points in the world frame for a sensor mounted on `pose`.
    pub fn to_world(&self, pose: &Pose2, mount_height: f64) -> Vec<Point3<f64>> {
        let (s, c) = pose.yaw.sin_cos();
        self.points
            .iter()
            .map(|p| Point3::new(pose.x + c * p.x - s * p.y, pose.y + s * p.x + c * p.y, p.z + mount_height))
            .collect()
    }

    /// No-return directions rotated into the world frame.
    pub fn misses_to_world(&self, pose: &Pose2) -> Vec<Vector3<f64>> {
        let (s, c) = pose.yaw.sin_cos();
        self.misses.iter().map(|d| Vector3::new(c * d.x - s * d.y, s * d.x + c * d.y, d.z)).collect()
    }
}

/// Raycasts the full spinning pattern. Passing `None` for `rng` disables
/// range noise regardless of the configured sigma.
pub fn simulate_lidar<R: Rng>(
    world: &WorldModel,
    agents: &[Capsule],
    pose: &Pose2,
    cfg: &LidarConfig,
    directions: &[Vector3<f64>],
    timestamp: f64,
    mut rng: Option<&mut R>,
) -> LidarScan {
    let origin = Point3::new(pose.x, pose.y, cfg.mount_height);
    let (s, c) = pose.yaw.sin_cos();
    let noise = (cfg.range_noise > 0.0).then(|| Normal::new(0.0, cfg.range_noise).unwrap());
    let mut points = Vec::with_capacity(directions.len());
    let mut misses = Vec::new();
    for d in directions {
        let world_dir = Vector3::new(c * d.x - s * d.y, s * d.x + c * d.y, d.z);
        let Some(hit) = world.raycast(&origin, &world_dir, cfg.max_range, agents) else {
            misses.push(*d);
            continue;
        };
        let mut range = hit.range;
        if let (Some(n), Some(r)) = (&noise, rng.as_deref_mut()) {
            range += n.sample(r);
        }
        if range < cfg.min_range || range > cfg.max_range {
            misses.push(*d);
            continue;
        }
        points.push(Point3::from(d * range));
    }
    LidarScan { points, misses, timestamp }
}
