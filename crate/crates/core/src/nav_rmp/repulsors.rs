use std::collections::VecDeque;

use nalgebra::{Matrix3, Point2, Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::occupancy::ObstacleCube;
use super::policy::{combine, PolicyOutput};
use crate::geometry::Aabb3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepulsorConfig {
    /// Peak push.
    pub eta: f64,
    /// Decay length of the weight `exp(-d/ℓ)`.
    pub length: f64,
    /// Extra braking per m/s of approach speed.
    pub damping: f64,
    /// Isotropic metric share; keeps each metric full rank.
    pub epsilon: f64,
    /// Obstacles farther than this are ignored.
    pub cutoff: f64,
    /// Boxes are grown by this margin first.
    pub inflation: f64,
}

impl RepulsorConfig {
    pub fn static_default() -> Self {
        Self { eta: 4.0, length: 0.4, damping: 2.0, epsilon: 0.01, cutoff: 5.0, inflation: 0.0 }
    }

    pub fn dynamic_default() -> Self {
        Self { eta: 6.0, length: 1.5, damping: 2.0, epsilon: 0.01, cutoff: 5.0, inflation: 0.3 }
    }

    pub fn validate(&self, name: &str) -> Result<(), String> {
        if !(self.length > 0.0) || !(self.eta >= 0.0) || !(self.damping >= 0.0) || !(self.epsilon > 0.0) || !(self.inflation >= 0.0) {
            return Err(format!("nav.{name}: length and epsilon must be positive, eta, damping and inflation non-negative"));
        }
        Ok(())
    }
}

impl Default for RepulsorConfig {
    fn default() -> Self {
        Self::static_default()
    }
}

/// Push away from one box. `d` is measured from the robot body surface.
pub fn box_repulsor(p: &Point3<f64>, v: &Vector3<f64>, aabb: &Aabb3, body_radius: f64, cfg: &RepulsorConfig) -> Option<PolicyOutput<3>> {
    let aabb = aabb.inflated(cfg.inflation);
    let q = aabb.closest_point(p);
    let mut away = p - q;
    let gap = away.norm();
    if gap < 1e-9 {
        away = p - aabb.center();
        away.z = 0.0;
        if away.norm() < 1e-9 {
            away = Vector3::x();
        }
    }
    let u = away.normalize();
    let d = (gap - body_radius).max(0.0);
    if d > cfg.cutoff {
        return None;
    }
    let w = (-d / cfg.length).exp();
    let approach = (-v.dot(&u)).max(0.0);
    let accel = u * (w * (cfg.eta + cfg.damping * approach));
    let metric = (u * u.transpose() + Matrix3::identity() * cfg.epsilon) * w;
    Some(PolicyOutput::new(accel, metric))
}

/// Metric-weighted sum of per-box repulsors.
pub fn obstacle_policy<'a>(
    p: &Point3<f64>,
    v: &Vector3<f64>,
    boxes: impl IntoIterator<Item = &'a Aabb3>,
    body_radius: f64,
    cfg: &RepulsorConfig,
) -> PolicyOutput<3> {
    let parts: Vec<PolicyOutput<3>> = boxes.into_iter().filter_map(|b| box_repulsor(p, v, b, body_radius, cfg)).collect();
    combine(&parts)
}

pub fn static_obstacle_policy(p: &Point3<f64>, v: &Vector3<f64>, cubes: &[ObstacleCube], body_radius: f64, cfg: &RepulsorConfig) -> PolicyOutput<3> {
    let boxes: Vec<Aabb3> = cubes.iter().map(ObstacleCube::aabb).collect();
    obstacle_policy(p, v, &boxes, body_radius, cfg)
}

/// Recent people boxes, kept for a short horizon so that the policy sees
/// where people have just been as well as where they are.
#[derive(Debug, Clone)]
pub struct DynamicObstacleBuffer {
    horizon: f64,
    entries: VecDeque<(f64, Aabb3)>,
}

impl DynamicObstacleBuffer {
    pub fn new(horizon: f64) -> Self {
        Self { horizon, entries: VecDeque::new() }
    }

    pub fn push(&mut self, t: f64, aabb: Aabb3) {
        self.entries.push_back((t, aabb));
        self.prune(t);
    }

    pub fn prune(&mut self, now: f64) {
        while self.entries.front().is_some_and(|(t, _)| now - t > self.horizon) {
            self.entries.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// Boxes whose centre is farther than `exclusion` from `leader` in xy.
    pub fn boxes_excluding(&self, leader: Option<Point2<f64>>, exclusion: f64) -> Vec<Aabb3> {
        self.entries
            .iter()
            .map(|(_, b)| *b)
            .filter(|b| {
                let c = b.center();
                leader.is_none_or(|l| (Point2::new(c.x, c.y) - l).norm() > exclusion)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube_at(x: f64, y: f64) -> Aabb3 {
        Aabb3::from_center_half(Point3::new(x, y, 0.4), Vector3::repeat(0.05))
    }

    #[test]
    fn pushes_away() {
        let cfg = RepulsorConfig::static_default();
        let p = Point3::new(0.0, 0.0, 0.4);
        let out = obstacle_policy(&p, &Vector3::zeros(), &[cube_at(1.0, 0.0)], 0.0, &cfg);
        assert!(out.accel.x < 0.0);
        assert!(out.accel.y.abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair_cancels_laterally() {
        let cfg = RepulsorConfig::static_default();
        let p = Point3::new(0.0, 0.0, 0.4);
        let out = obstacle_policy(&p, &Vector3::new(0.5, 0.0, 0.0), &[cube_at(0.5, 1.0), cube_at(0.5, -1.0)], 0.35, &cfg);
        assert!(out.accel.y.abs() < 1e-9);
    }

    #[test]
    fn nothing_in_range() {
        let cfg = RepulsorConfig::static_default();
        let out = obstacle_policy(&Point3::new(0.0, 0.0, 0.4), &Vector3::zeros(), &[cube_at(9.0, 0.0)], 0.0, &cfg);
        assert_eq!(out, PolicyOutput::zero());
    }

    #[test]
    fn dynamic_box_stronger_than_static_cube() {
        let p = Point3::new(0.0, 0.0, 0.4);
        let b = cube_at(1.05, 0.0);
        let s = box_repulsor(&p, &Vector3::zeros(), &b, 0.0, &RepulsorConfig::static_default()).unwrap();
        let d = box_repulsor(&p, &Vector3::zeros(), &b, 0.0, &RepulsorConfig::dynamic_default()).unwrap();
        assert!(d.accel.norm() > s.accel.norm());
    }

    #[test]
    fn buffer_forgets_and_excludes_leader() {
        let mut buf = DynamicObstacleBuffer::new(1.0);
        buf.push(0.0, cube_at(3.0, 0.0));
        buf.push(0.5, cube_at(0.0, 3.0));
        assert_eq!(buf.boxes_excluding(Some(Point2::new(3.0, 0.1)), 0.6).len(), 1);
        buf.prune(1.2);
        assert_eq!(buf.len(), 1);
    }
}
