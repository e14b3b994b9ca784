use nalgebra::{Point2, Point3};
use rand_chacha::ChaCha8Rng;

use super::metrics::{aoa_error_stats, AoaLogRow};
use crate::geometry::Pose2;
use crate::rf_array::{AoaConfig, AoaSensor, RfError};
use crate::world_sim::{beacon_bearing, simulate_beacon_iq, stream_rng, BeaconConfig, Stream, Wall, WorldModel};

/// Static-beacon AoA experiment: the beacon sits at each bearing in turn
/// for an equal share of the run while the array samples at 5 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct AoaTrialConfig {
    pub duration: f64,
    pub rate: f64,
    /// Beacon bearings, radians, robot frame.
    pub bearings: Vec<f64>,
    pub range: f64,
    /// Height of the beacon above the array plane.
    pub elevation: f64,
    /// Reflecting wall parallel to x at `y = -offset`.
    pub wall_offset: Option<f64>,
    pub beacon: BeaconConfig,
    pub aoa: AoaConfig,
    pub seed: u64,
}

impl Default for AoaTrialConfig {
    fn default() -> Self {
        Self {
            duration: 60.0,
            rate: 5.0,
            bearings: (0..12).map(|k| (k as f64 * 30.0 - 165.0).to_radians()).collect(),
            range: 2.0,
            elevation: 0.0,
            wall_offset: None,
            beacon: BeaconConfig { snr_db: 10.0, ..BeaconConfig::default() },
            aoa: AoaConfig::default(),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoaTrialReport {
    /// Published estimates of the configured estimator.
    pub rows: Vec<AoaLogRow>,
    /// Same snapshots through an estimator without spatial smoothing.
    pub unsmoothed_rows: Vec<AoaLogRow>,
    pub mean_abs_deg: f64,
    pub std_deg: f64,
    pub unsmoothed_mean_abs_deg: f64,
    pub unsmoothed_std_deg: f64,
}

/// Runs the experiment. Each bearing gets a fresh estimator so no window
/// straddles two beacon positions; the first `window` cycles are warm-up.
pub fn run_aoa_trial(cfg: &AoaTrialConfig) -> Result<AoaTrialReport, RfError> {
    let mut world = WorldModel::empty(Point2::new(-10.0, -10.0), Point2::new(10.0, 10.0));
    if let Some(d) = cfg.wall_offset {
        world.walls.push(Wall { start: Point2::new(-10.0, -d), end: Point2::new(10.0, -d), height: 2.5 });
    }
    let smoothed_cfg = cfg.aoa.clone();
    let plain_cfg = AoaConfig { n_subarrays: 1, ..cfg.aoa.clone() };
    let geometry = AoaSensor::new(smoothed_cfg.clone())?.geometry().clone();
    let pose = Pose2::default();
    let mut rng: ChaCha8Rng = stream_rng(cfg.seed, Stream::Beacon);

    let per_bearing = ((cfg.duration * cfg.rate) as usize / cfg.bearings.len().max(1)).max(1);
    let mut rows = Vec::new();
    let mut unsmoothed_rows = Vec::new();
    let mut k = 0usize;
    for &bearing in &cfg.bearings {
        let mut smoothed = AoaSensor::new(smoothed_cfg.clone())?;
        let mut plain = AoaSensor::new(plain_cfg.clone())?;
        let xy = Point2::new(bearing.cos(), bearing.sin()) * cfg.range;
        let beacon = Point3::new(xy.x, xy.y, cfg.beacon.array_height + cfg.elevation);
        let truth = beacon_bearing(&pose, &xy);
        for i in 0..per_bearing {
            let t = k as f64 / cfg.rate;
            k += 1;
            let snap = simulate_beacon_iq(&world, &geometry, &pose, &beacon, &cfg.beacon, t, &mut rng);
            let a = smoothed.process(&snap)?;
            let b = plain.process(&snap)?;
            if i < cfg.aoa.window {
                continue;
            }
            for (r, out) in [(a, &mut rows), (b, &mut unsmoothed_rows)] {
                out.push(AoaLogRow {
                    t,
                    azimuth: r.estimate.azimuth,
                    confidence: r.estimate.confidence,
                    low_confidence: r.estimate.low_confidence,
                    raw_azimuth: r.raw.azimuth,
                    truth,
                });
            }
        }
    }
    let (mean_abs_deg, std_deg) = aoa_error_stats(&rows);
    let (unsmoothed_mean_abs_deg, unsmoothed_std_deg) = aoa_error_stats(&unsmoothed_rows);
    Ok(AoaTrialReport { rows, unsmoothed_rows, mean_abs_deg, std_deg, unsmoothed_mean_abs_deg, unsmoothed_std_deg })
}
