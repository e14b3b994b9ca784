use nalgebra::{Point3, Vector2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grid::HashGrid;
use super::ransac::{remove_planes, RansacConfig};
use crate::geometry::wrap_angle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssociationConfig {
    pub match_radius: f64,
    /// Fraction of matched points dropped, farthest from the predicted centre first.
    pub reject_fraction: f64,
    pub min_matches: usize,
    /// Planar crop around the predicted leader before plane removal.
    pub roi_radius: f64,
    /// Floor residue below this height is ignored.
    pub min_height: f64,
    pub ransac: RansacConfig,
}

impl Default for AssociationConfig {
    fn default() -> Self {
        Self {
            match_radius: 0.5,
            reject_fraction: 0.4,
            min_matches: 10,
            roi_radius: 3.0,
            min_height: 0.15,
            ransac: RansacConfig::default(),
        }
    }
}

/// Bearing wedge from a camera detection, world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wedge {
    pub apex: Vector2<f64>,
    pub bearing: f64,
    pub half_width: f64,
}

impl Wedge {
    pub fn contains(&self, p: &Point3<f64>) -> bool {
        let d = p.xy().coords - self.apex;
        wrap_angle(d.y.atan2(d.x) - self.bearing).abs() <= self.half_width
    }
}

/// Keeps the `⌈(1 − fraction)·n⌉` points nearest `center` in the plane.
/// Ordering is by distance, then by input index.
pub fn reject_farthest(points: &[Point3<f64>], center: &Vector2<f64>, fraction: f64) -> Vec<Point3<f64>> {
    let keep = ((1.0 - fraction) * points.len() as f64 - 1e-9).ceil().max(0.0) as usize;
    let mut order: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| ((p.xy().coords - center).norm(), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut kept: Vec<usize> = order.into_iter().take(keep).map(|(_, i)| i).collect();
    kept.sort_unstable();
    kept.into_iter().map(|i| points[i]).collect()
}

/// Matches the predicted leader cloud against a world-frame scan.
///
/// `previous` is the last leader point set and `displacement` the EKF
/// predicted motion since then; ego-motion is already compensated because
/// the scan is expressed in the world frame. Every scan point within the
/// match radius of a predicted point is taken (a nearest-only rule would
/// shrink the set each cycle), planes are removed first, then the farthest
/// fraction is rejected. Fewer than `min_matches` survivors yields an empty
/// set.
pub fn associate_leader_points<R: Rng>(
    previous: &[Point3<f64>],
    displacement: Vector2<f64>,
    center: Vector2<f64>,
    scan_world: &[Point3<f64>],
    wedge: Option<&Wedge>,
    cfg: &AssociationConfig,
    rng: &mut R,
) -> Vec<Point3<f64>> {
    let predicted: Vec<Point3<f64>> = previous
        .iter()
        .map(|p| Point3::new(p.x + displacement.x, p.y + displacement.y, p.z))
        .collect();
    let roi: Vec<Point3<f64>> = scan_world
        .iter()
        .filter(|p| (p.xy().coords - center).norm() <= cfg.roi_radius)
        .cloned()
        .collect();
    let (cleaned, _) = remove_planes(&roi, &cfg.ransac, rng);
    let candidates: Vec<Point3<f64>> = cleaned.into_iter().filter(|p| p.z >= cfg.min_height).collect();

    let grid = HashGrid::new(&candidates, cfg.match_radius);
    let mut hits = Vec::new();
    for q in &predicted {
        grid.within(q, cfg.match_radius, &mut hits);
    }
    hits.sort_unstable();
    hits.dedup();
    let matched: Vec<Point3<f64>> = hits
        .into_iter()
        .map(|i| candidates[i as usize])
        .filter(|p| wedge.is_none_or(|w| w.contains(p)))
        .collect();
    if matched.len() < cfg.min_matches {
        return Vec::new();
    }
    reject_farthest(&matched, &center, cfg.reject_fraction)
}

pub fn centroid(points: &[Point3<f64>]) -> Option<Point3<f64>> {
    (!points.is_empty()).then(|| Point3::from(points.iter().fold(nalgebra::Vector3::zeros(), |s, p| s + p.coords) / points.len() as f64))
}
