//! Leader identification: pick the camera detection that agrees with the
//! AoA bearing, lift it to a 3D hypothesis from the LiDAR cloud, and
//! confirm two consistent hypotheses into an initial track.

use nalgebra::{Point3, Vector2};
use serde::{Deserialize, Serialize};

use crate::geometry::{angle_distance, wrap_angle, Pose2};
use crate::leader_tracker::{centroid, EkfConfig, LeaderBelief};
use crate::rf_array::AoAEstimate;
use crate::world_sim::{DetectionBox, LidarScan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    pub match_gate_deg: f64,
    pub tie_tolerance_deg: f64,
    pub min_cluster_points: usize,
    pub range_gap: f64,
    pub min_height: f64,
    pub max_height: f64,
    pub max_scan_age: f64,
    pub consistency_gate: f64,
    /// Spacing between the two hypotheses of the confirmation handshake.
    pub min_confirm_gap: f64,
    pub max_confirm_gap: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            match_gate_deg: 20.0,
            tie_tolerance_deg: 0.1,
            min_cluster_points: 20,
            range_gap: 0.4,
            min_height: 0.2,
            max_height: 2.0,
            max_scan_age: 0.2,
            consistency_gate: 0.8,
            min_confirm_gap: 0.5,
            max_confirm_gap: 1.0,
        }
    }
}

/// Candidate leader position with the LiDAR points that support it.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderHypothesis {
    /// Centroid, world frame.
    pub position: Point3<f64>,
    /// Cluster points, world frame.
    pub points: Vec<Point3<f64>>,
    pub source_detection: DetectionBox,
    pub timestamp: f64,
}

/// Detection nearest the AoA bearing inside the gate. Near-ties go to the
/// wider box (the nearer person), then to the earlier detection.
pub fn match_detection_to_aoa(detections: &[DetectionBox], aoa: &AoAEstimate, cfg: &FusionConfig) -> Option<DetectionBox> {
    if aoa.low_confidence {
        return None;
    }
    let gate = cfg.match_gate_deg.to_radians();
    let tie = cfg.tie_tolerance_deg.to_radians();
    let dist = |d: &DetectionBox| angle_distance(d.bearing, aoa.azimuth);
    let best = detections.iter().map(dist).filter(|&d| d <= gate).min_by(f64::total_cmp)?;
    detections
        .iter()
        .filter(|d| dist(d) <= gate && dist(d) <= best + tie)
        .fold(None::<&DetectionBox>, |acc, d| match acc {
            Some(a) if a.angular_extent >= d.angular_extent => Some(a),
            _ => Some(d),
        })
        .copied()
}

/// All range-gap clusters of the wedge points, nearest first. Each cluster
/// holds `(planar range, world point)` pairs.
pub fn wedge_clusters(
    detection: &DetectionBox,
    scan: &LidarScan,
    robot: &Pose2,
    mount_height: f64,
    cfg: &FusionConfig,
) -> Vec<Vec<(f64, Point3<f64>)>> {
    let half = detection.angular_extent / 2.0;
    let mut wedge: Vec<(f64, Point3<f64>)> = scan
        .points
        .iter()
        .filter_map(|p| {
            let z = p.z + mount_height;
            if z < cfg.min_height || z > cfg.max_height {
                return None;
            }
            if angle_distance(p.y.atan2(p.x), detection.bearing) > half {
                return None;
            }
            Some((p.xy().coords.norm(), p))
        })
        .map(|(r, p)| {
            let (s, c) = robot.yaw.sin_cos();
            (r, Point3::new(robot.x + c * p.x - s * p.y, robot.y + s * p.x + c * p.y, p.z + mount_height))
        })
        .collect();
    wedge.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut clusters: Vec<Vec<(f64, Point3<f64>)>> = Vec::new();
    for item in wedge {
        match clusters.last_mut() {
            Some(c) if item.0 - c.last().unwrap().0 <= cfg.range_gap => c.push(item),
            _ => clusters.push(vec![item]),
        }
    }
    clusters
}

/// Nearest "large mass" in the detection's bearing wedge.
pub fn extract_foreground_cluster(
    detection: &DetectionBox,
    scan: &LidarScan,
    robot: &Pose2,
    mount_height: f64,
    now: f64,
    cfg: &FusionConfig,
) -> Option<LeaderHypothesis> {
    if now - scan.timestamp > cfg.max_scan_age {
        return None;
    }
    let cluster = wedge_clusters(detection, scan, robot, mount_height, cfg)
        .into_iter()
        .find(|c| c.len() >= cfg.min_cluster_points)?;
    let points: Vec<Point3<f64>> = cluster.into_iter().map(|(_, p)| p).collect();
    Some(LeaderHypothesis {
        position: centroid(&points)?,
        points,
        source_detection: *detection,
        timestamp: scan.timestamp,
    })
}

/// Two-hypothesis handshake; `None` when the pair is inconsistent.
pub fn confirm_leader(h1: &LeaderHypothesis, h2: &LeaderHypothesis, fusion: &FusionConfig, ekf: &EkfConfig) -> Option<LeaderBelief> {
    let dt = h2.timestamp - h1.timestamp;
    if !(dt > 0.0 && dt <= fusion.max_confirm_gap) {
        return None;
    }
    let disp = Vector2::new(h2.position.x - h1.position.x, h2.position.y - h1.position.y);
    if disp.norm() > fusion.consistency_gate {
        return None;
    }
    Some(LeaderBelief::new(
        Vector2::new(h2.position.x, h2.position.y),
        disp / dt,
        h2.points.clone(),
        h2.timestamp,
        ekf,
    ))
}

/// Orchestrator-side state of the confirmation handshake.
#[derive(Debug, Clone, Default)]
pub struct LeaderSelector {
    pending: Option<LeaderHypothesis>,
}

impl LeaderSelector {
    pub fn clear(&mut self) {
        self.pending = None;
    }

    pub fn pending(&self) -> Option<&LeaderHypothesis> {
        self.pending.as_ref()
    }

    /// Feeds a new hypothesis; returns a belief once two consistent
    /// hypotheses at least `min_confirm_gap` apart have been seen.
    pub fn offer(&mut self, h: LeaderHypothesis, fusion: &FusionConfig, ekf: &EkfConfig) -> Option<LeaderBelief> {
        match &self.pending {
            Some(first) if h.timestamp - first.timestamp < fusion.min_confirm_gap => None,
            Some(first) => match confirm_leader(first, &h, fusion, ekf) {
                Some(belief) => {
                    self.pending = None;
                    Some(belief)
                }
                None => {
                    self.pending = Some(h);
                    None
                }
            },
            None => {
                self.pending = Some(h);
                None
            }
        }
    }
}

/// World-frame bearing of a robot-frame detection.
pub fn detection_world_bearing(detection: &DetectionBox, robot: &Pose2) -> f64 {
    wrap_angle(detection.bearing + robot.yaw)
}
