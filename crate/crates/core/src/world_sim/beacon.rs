use std::f64::consts::PI;

use nalgebra::{Point2, Point3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::world::WorldModel;
use crate::geometry::Pose2;
use crate::rf_array::{ArrayGeometry, IqSnapshot, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeaconConfig {
    /// Direct-path signal to noise ratio per sample at the reference antenna.
    pub snr_db: f64,
    pub slot_samples: usize,
    /// Half-width of the uniform per-slot switching jitter.
    pub slot_jitter: f64,
    pub reflection_coeff: f64,
    pub max_reflections: usize,
    pub array_height: f64,
    /// Residual carrier offset, radians per sample.
    pub carrier_drift: f64,
}

impl Default for BeaconConfig {
    fn default() -> Self {
        Self {
            snr_db: 20.0,
            slot_samples: 16,
            slot_jitter: 0.3,
            reflection_coeff: 0.5,
            max_reflections: 2,
            array_height: 0.6,
            carrier_drift: 0.02,
        }
    }
}

/// One propagation path: the (possibly mirrored) source and its gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfPath {
    pub source: Point3<f64>,
    pub gain: f64,
}

/// Direct path plus first-order specular reflections from the nearest
/// walls that produce a valid bounce point.
pub fn propagation_paths(world: &WorldModel, array_center: &Point3<f64>, beacon: &Point3<f64>, cfg: &BeaconConfig) -> Vec<RfPath> {
    let mut paths = vec![RfPath { source: *beacon, gain: 1.0 }];
    let mut images: Vec<(f64, RfPath)> = world
        .walls
        .iter()
        .filter_map(|w| {
            let sa = w.signed_distance(&array_center.xy());
            let sb = w.signed_distance(&beacon.xy());
            if sa * sb <= 0.0 {
                return None;
            }
            let image = w.mirror(beacon);
            let d = array_center - image;
            // bounce point where the image→array segment crosses the plane
            let s = sb.abs() / (sa.abs() + sb.abs());
            let bounce = image + d * s;
            let along = w.end - w.start;
            let u = (bounce.xy() - w.start).dot(&along) / along.norm_squared();
            ((0.0..=1.0).contains(&u) && (0.0..=w.height).contains(&bounce.z))
                .then(|| (d.norm(), RfPath { source: image, gain: cfg.reflection_coeff }))
        })
        .collect();
    images.sort_by(|a, b| a.0.total_cmp(&b.0));
    paths.extend(images.into_iter().take(cfg.max_reflections).map(|(_, p)| p));
    paths
}

/// Field at `at` from all paths, with 1/r spreading.
fn field(paths: &[RfPath], at: &Point3<f64>, k: f64) -> C64 {
    paths
        .iter()
        .map(|p| {
            let r = (p.source - at).norm().max(1e-3);
            C64::from_polar(p.gain / r, -k * r)
        })
        .sum()
}

/// Builds one TDM snapshot for an array centred on the robot.
pub fn simulate_beacon_iq<R: Rng>(
    world: &WorldModel,
    geom: &ArrayGeometry,
    pose: &Pose2,
    beacon: &Point3<f64>,
    cfg: &BeaconConfig,
    timestamp: f64,
    rng: &mut R,
) -> IqSnapshot {
    let center = Point3::new(pose.x, pose.y, cfg.array_height);
    let paths = propagation_paths(world, &center, beacon, cfg);
    let k = geom.wavenumber();
    let reference = field(&paths, &center, k);
    let direct_power = (1.0 / (beacon - center).norm().max(1e-3)).powi(2);
    let sigma = (direct_power / 10f64.powf(cfg.snr_db / 10.0) / 2.0).sqrt();
    let noise = Normal::new(0.0, sigma).unwrap();
    let n = cfg.slot_samples;

    let mut slot_samples = Vec::with_capacity(geom.ring_count());
    let mut reference_samples = Vec::with_capacity(geom.ring_count());
    let mut slot_phase_jitter = Vec::with_capacity(geom.ring_count());
    for i in 0..geom.ring_count() {
        let (lx, ly) = geom.element_position(i);
        let (s, c) = pose.yaw.sin_cos();
        let element = Point3::new(pose.x + c * lx - s * ly, pose.y + s * lx + c * ly, cfg.array_height);
        let x = field(&paths, &element, k);
        let carrier = rng.random_range(-PI..PI);
        let jitter = rng.random_range(-cfg.slot_jitter..=cfg.slot_jitter);
        slot_phase_jitter.push(jitter);
        let mut xs = Vec::with_capacity(n);
        let mut rs = Vec::with_capacity(n);
        for s in 0..n {
            let common = C64::from_polar(1.0, carrier + jitter + cfg.carrier_drift * s as f64);
            xs.push(x * common + C64::new(noise.sample(rng), noise.sample(rng)));
            rs.push(reference * common + C64::new(noise.sample(rng), noise.sample(rng)));
        }
        slot_samples.push(xs);
        reference_samples.push(rs);
    }
    IqSnapshot { slot_samples, reference_samples, slot_phase_jitter, timestamp }
}

/// True planar bearing of the beacon from the array centre, robot frame.
pub fn beacon_bearing(pose: &Pose2, beacon: &Point2<f64>) -> f64 {
    pose.bearing_to(*beacon)
}
