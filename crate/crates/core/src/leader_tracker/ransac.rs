use nalgebra::{Point3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacConfig {
    /// Point-to-plane inlier distance.
    pub threshold: f64,
    /// Only planes with at least this many inliers are removed.
    pub min_inliers: usize,
    pub max_planes: usize,
    /// Hypotheses drawn per plane.
    pub iterations: usize,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            threshold: 0.05,
            min_inliers: 500,
            max_planes: 4,
            iterations: 64,
        }
    }
}

/// Plane `n·p + d = 0` with unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Vector3<f64>,
    pub offset: f64,
}

impl Plane {
    pub fn through(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Option<Self> {
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len < 1e-9 {
            return None;
        }
        let normal = n / len;
        Some(Self { normal, offset: -normal.dot(&a.coords) })
    }

    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        (self.normal.dot(&p.coords) + self.offset).abs()
    }
}

/// Iteratively removes the dominant plane while it has enough support.
/// Returns the surviving points (input order kept) and the removed planes.
pub fn remove_planes<R: Rng>(points: &[Point3<f64>], cfg: &RansacConfig, rng: &mut R) -> (Vec<Point3<f64>>, Vec<Plane>) {
    let mut remaining: Vec<Point3<f64>> = points.to_vec();
    let mut planes = Vec::new();
    for _ in 0..cfg.max_planes {
        let n = remaining.len();
        if n < cfg.min_inliers.max(3) {
            break;
        }
        let mut best: Option<(usize, Plane)> = None;
        for _ in 0..cfg.iterations {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            let k = rng.random_range(0..n);
            if i == j || j == k || i == k {
                continue;
            }
            let Some(plane) = Plane::through(&remaining[i], &remaining[j], &remaining[k]) else {
                continue;
            };
            let count = remaining.iter().filter(|p| plane.distance(p) <= cfg.threshold).count();
            if best.is_none_or(|(c, _)| count > c) {
                best = Some((count, plane));
            }
        }
        match best {
            Some((count, plane)) if count >= cfg.min_inliers => {
                remaining.retain(|p| plane.distance(p) > cfg.threshold);
                planes.push(plane);
            }
            _ => break,
        }
    }
    (remaining, planes)
}
