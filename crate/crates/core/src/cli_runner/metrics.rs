use std::fmt::Write as _;

use nalgebra::{Point2, Vector2};
use serde::Serialize;

use super::RunnerError;
use crate::geometry::angle_distance;
use crate::leader_tracker::{TrackerRecord, TrackerStatus};
use crate::nav_rmp::{follow_goal_from, FollowConfig, NavStep};
use crate::world_sim::{TruthRecord, WorldModel, BODY_RADIUS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AoaLogRow {
    pub t: f64,
    pub azimuth: f64,
    pub confidence: f64,
    pub low_confidence: bool,
    pub raw_azimuth: f64,
    /// True robot-frame bearing to the beacon.
    pub truth: f64,
}

impl AoaLogRow {
    pub const CSV_HEADER: &'static str = "t,azimuth,confidence,low_confidence,raw_azimuth,truth";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.3},{:.6},{:.6},{},{:.6},{:.6}",
            self.t, self.azimuth, self.confidence, self.low_confidence as u8, self.raw_azimuth, self.truth
        )
    }

    /// Signed error, radians, in (−π, π].
    pub fn error(&self) -> f64 {
        crate::geometry::wrap_angle_upper(self.azimuth - self.truth)
    }
}

/// Everything one run records; the files under `--logs` are renderings of this.
#[derive(Debug, Clone, Default)]
pub struct RunLogs {
    pub truth: Vec<TruthRecord>,
    pub tracker: Vec<TrackerRecord>,
    pub aoa: Vec<AoaLogRow>,
    pub nav: Vec<NavStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub scenario: String,
    pub seed: u64,
    pub duration: f64,
    pub follow_error_rms: f64,
    pub follow_samples: usize,
    pub min_clearance: f64,
    pub collision_count: usize,
    pub id_switches: usize,
    pub recovery_time_mean: f64,
    pub unrecovered: usize,
    /// Degrees.
    pub aoa_mean_abs_error: f64,
    /// Degrees; population standard deviation of the signed error.
    pub aoa_std_error: f64,
    pub aoa_samples: usize,
    pub time_to_first_track: f64,
    pub tracking_fraction: f64,
    pub final_status: TrackerStatus,
}

impl RunMetrics {
    pub const CSV_HEADER: &'static str = "scenario,seed,duration,follow_error_rms,follow_samples,min_clearance,collision_count,id_switches,recovery_time_mean,unrecovered,aoa_mean_abs_error,aoa_std_error,aoa_samples,time_to_first_track,tracking_fraction,final_status";

    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{:.3},{:.6},{},{:.6},{},{},{:.3},{},{:.6},{:.6},{},{:.3},{:.6},{}",
            self.scenario.replace(',', ";"),
            self.seed,
            self.duration,
            self.follow_error_rms,
            self.follow_samples,
            self.min_clearance,
            self.collision_count,
            self.id_switches,
            self.recovery_time_mean,
            self.unrecovered,
            self.aoa_mean_abs_error,
            self.aoa_std_error,
            self.aoa_samples,
            self.time_to_first_track,
            self.tracking_fraction,
            self.final_status
        )
        .expect("string write");
        s
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }

    pub fn collided(&self) -> bool {
        self.collision_count > 0
    }
}

/// Mean absolute and population standard deviation of signed errors, degrees.
pub fn aoa_error_stats(rows: &[AoaLogRow]) -> (f64, f64) {
    if rows.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = rows.len() as f64;
    let e: Vec<f64> = rows.iter().map(|r| r.error().to_degrees()).collect();
    let mean_abs = e.iter().map(|v| v.abs()).sum::<f64>() / n;
    let mean = e.iter().sum::<f64>() / n;
    let var = e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean_abs, var.sqrt())
}

/// Robot footprint clearance to static geometry and agent bodies.
pub fn truth_clearance(world: &WorldModel, robot_radius: f64, rec: &TruthRecord) -> f64 {
    let p = rec.robot.position();
    rec.agents
        .iter()
        .map(|a| (Point2::new(a.x, a.y) - p).norm() - robot_radius - BODY_RADIUS)
        .fold(world.footprint_clearance(&p, robot_radius), f64::min)
}

struct Clock {
    t0: f64,
    dt: f64,
    n: usize,
}

impl Clock {
    fn of(truth: &[TruthRecord]) -> Result<Self, RunnerError> {
        let misaligned = |m: String| Err(RunnerError::Metrics(m));
        if truth.is_empty() {
            return misaligned("ground-truth log is empty".into());
        }
        let t0 = truth[0].t;
        if truth.len() == 1 {
            return Ok(Self { t0, dt: 1.0, n: 1 });
        }
        let dt = truth[1].t - truth[0].t;
        if !(dt > 0.0) {
            return misaligned("ground-truth timestamps are not increasing".into());
        }
        for (k, r) in truth.iter().enumerate() {
            if (r.t - (t0 + k as f64 * dt)).abs() > 1e-6 {
                return misaligned(format!("ground-truth record {k} at t={} breaks the uniform clock", r.t));
            }
        }
        Ok(Self { t0, dt, n: truth.len() })
    }

    fn index(&self, t: f64, log: &str, row: usize) -> Result<usize, RunnerError> {
        let k = ((t - self.t0) / self.dt).round();
        if k < 0.0 || k as usize >= self.n || (self.t0 + k * self.dt - t).abs() > 1e-6 {
            return Err(RunnerError::Metrics(format!("{log} row {row} at t={t} has no ground-truth sample")));
        }
        Ok(k as usize)
    }
}

/// Status in force at time `t`: the latest tracker row not after it.
fn status_at(tracker: &[TrackerRecord], t: f64) -> TrackerStatus {
    let k = tracker.partition_point(|r| r.t <= t + 1e-9);
    if k == 0 {
        TrackerStatus::Uninitialized
    } else {
        tracker[k - 1].status
    }
}

/// Metrics from time-aligned logs. Every tracker, AoA and nav timestamp must
/// fall on a ground-truth tick.
pub fn compute_metrics(
    name: &str,
    seed: u64,
    world: &WorldModel,
    robot_radius: f64,
    follow: &FollowConfig,
    logs: &RunLogs,
) -> Result<RunMetrics, RunnerError> {
    let clock = Clock::of(&logs.truth)?;
    for w in logs.tracker.windows(2) {
        if w[1].t < w[0].t {
            return Err(RunnerError::Metrics("tracker log is not time-ordered".into()));
        }
    }
    for (i, r) in logs.tracker.iter().enumerate() {
        clock.index(r.t, "tracker", i)?;
    }
    for (i, r) in logs.aoa.iter().enumerate() {
        clock.index(r.t, "aoa", i)?;
    }

    let mut sq = 0.0;
    let mut samples = 0;
    for (i, s) in logs.nav.iter().enumerate() {
        let k = clock.index(s.t, "nav", i)?;
        if status_at(&logs.tracker, s.t) != TrackerStatus::Tracking {
            continue;
        }
        let rec = &logs.truth[k];
        let Some(leader) = rec.agents.iter().find(|a| a.leader) else {
            continue;
        };
        let goal = follow_goal_from(Vector2::new(leader.x, leader.y), Vector2::new(leader.vx, leader.vy), leader.heading, follow);
        sq += (goal.position() - rec.robot.position()).norm_squared();
        samples += 1;
    }

    let mut min_clearance = f64::INFINITY;
    let mut collisions = 0;
    let mut in_contact = false;
    for r in &logs.truth {
        let c = truth_clearance(world, robot_radius, r);
        min_clearance = min_clearance.min(c);
        let contact = c <= 0.0;
        if contact && !in_contact {
            collisions += 1;
        }
        in_contact = contact;
    }

    let mut switches = 0;
    let mut recoveries = Vec::new();
    let mut diverged_at: Option<f64> = None;
    let mut prev = TrackerStatus::Uninitialized;
    let mut first_track = f64::NAN;
    let mut tracking_rows = 0;
    for r in &logs.tracker {
        if r.status == TrackerStatus::Diverged && prev != TrackerStatus::Diverged {
            switches += 1;
            if diverged_at.is_none() {
                diverged_at = Some(r.t);
            }
        }
        if r.status == TrackerStatus::Tracking {
            tracking_rows += 1;
            if first_track.is_nan() {
                first_track = r.t;
            }
            if let Some(t0) = diverged_at.take() {
                recoveries.push(r.t - t0);
            }
        }
        prev = r.status;
    }
    let (aoa_mean, aoa_std) = aoa_error_stats(&logs.aoa);
    let duration = logs.truth.last().map(|r| r.t - logs.truth[0].t).unwrap_or(0.0);
    Ok(RunMetrics {
        scenario: name.to_string(),
        seed,
        duration,
        follow_error_rms: if samples > 0 { (sq / samples as f64).sqrt() } else { f64::NAN },
        follow_samples: samples,
        min_clearance,
        collision_count: collisions,
        id_switches: switches,
        recovery_time_mean: if recoveries.is_empty() { f64::NAN } else { recoveries.iter().sum::<f64>() / recoveries.len() as f64 },
        unrecovered: diverged_at.is_some() as usize,
        aoa_mean_abs_error: aoa_mean,
        aoa_std_error: aoa_std,
        aoa_samples: logs.aoa.len(),
        time_to_first_track: first_track,
        tracking_fraction: if logs.tracker.is_empty() { 0.0 } else { tracking_rows as f64 / logs.tracker.len() as f64 },
        final_status: logs.tracker.last().map(|r| r.status).unwrap_or(TrackerStatus::Uninitialized),
    })
}

/// Largest bearing error in a set of rows, degrees.
pub fn aoa_max_error(rows: &[AoaLogRow]) -> f64 {
    rows.iter().map(|r| angle_distance(r.azimuth, r.truth).to_degrees()).fold(0.0, f64::max)
}
