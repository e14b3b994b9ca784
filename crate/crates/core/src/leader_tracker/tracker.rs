use std::collections::VecDeque;
use std::fmt;

use nalgebra::{Point3, Vector2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::association::{associate_leader_points, centroid, AssociationConfig, Wedge};
use super::divergence::{check_divergence, AoaSample};
use super::ekf::{ekf_predict, ekf_update, EkfConfig, LeaderBelief};
use crate::geometry::Pose2;
use crate::rf_array::AoAEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TrackerStatus {
    Uninitialized,
    Tracking,
    Coasting,
    Diverged,
}

impl TrackerStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Uninitialized => "UNINITIALIZED",
            Self::Tracking => "TRACKING",
            Self::Coasting => "COASTING",
            Self::Diverged => "DIVERGED",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Uninitialized, Self::Tracking, Self::Coasting, Self::Diverged]
            .into_iter()
            .find(|v| v.as_str() == s)
    }

    /// Legal transitions; staying put is always legal.
    pub fn can_become(self, next: Self) -> bool {
        use TrackerStatus::*;
        self == next
            || matches!(
                (self, next),
                (Uninitialized, Tracking) | (Tracking, Coasting) | (Coasting, Tracking) | (_, Diverged) | (Diverged, Uninitialized)
            )
    }

    pub fn is_active(self) -> bool {
        matches!(self, Self::Tracking | Self::Coasting)
    }
}

impl fmt::Display for TrackerStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub ekf: EkfConfig,
    pub association: AssociationConfig,
    pub divergence_window: f64,
    pub divergence_threshold_deg: f64,
    /// Coasting longer than this declares the track lost.
    pub coast_timeout: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            ekf: EkfConfig::default(),
            association: AssociationConfig::default(),
            divergence_window: 2.0,
            divergence_threshold_deg: 30.0,
            coast_timeout: 3.0,
        }
    }
}

/// One row of the tracker log.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerRecord {
    pub t: f64,
    pub px: f64,
    pub py: f64,
    pub vx: f64,
    pub vy: f64,
    pub trace_p: f64,
    pub status: TrackerStatus,
    pub n_points: usize,
}

impl TrackerRecord {
    pub const CSV_HEADER: &'static str = "t,px,py,vx,vy,trace_P,status,n_points";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.3},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
            self.t, self.px, self.py, self.vx, self.vy, self.trace_p, self.status, self.n_points
        )
    }

    pub fn parse_csv_row(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return None;
        }
        Some(Self {
            t: f[0].parse().ok()?,
            px: f[1].parse().ok()?,
            py: f[2].parse().ok()?,
            vx: f[3].parse().ok()?,
            vy: f[4].parse().ok()?,
            trace_p: f[5].parse().ok()?,
            status: TrackerStatus::parse(f[6])?,
            n_points: f[7].parse().ok()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleReport {
    pub status: TrackerStatus,
    pub measured: bool,
    pub gated: bool,
    pub n_points: usize,
}

/// Single-owner leader track: EKF, point association, coasting and the
/// AoA divergence monitor.
#[derive(Debug, Clone)]
pub struct LeaderTracker {
    cfg: TrackerConfig,
    status: TrackerStatus,
    belief: Option<LeaderBelief>,
    /// Time the belief state refers to.
    state_time: f64,
    coasting_since: Option<f64>,
    aoa: VecDeque<AoaSample>,
    last_known: Option<Vector2<f64>>,
}

impl LeaderTracker {
    pub fn new(cfg: TrackerConfig) -> Self {
        Self {
            cfg,
            status: TrackerStatus::Uninitialized,
            belief: None,
            state_time: 0.0,
            coasting_since: None,
            aoa: VecDeque::new(),
            last_known: None,
        }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn status(&self) -> TrackerStatus {
        self.status
    }

    pub fn belief(&self) -> Option<&LeaderBelief> {
        self.belief.as_ref()
    }

    /// Last leader position seen while the track was active.
    pub fn last_known(&self) -> Option<Vector2<f64>> {
        self.last_known
    }

    fn set_status(&mut self, next: TrackerStatus) {
        debug_assert!(self.status.can_become(next), "{} -> {}", self.status, next);
        self.status = next;
    }

    pub fn initialize(&mut self, belief: LeaderBelief) {
        self.state_time = belief.last_update;
        self.last_known = Some(belief.position);
        self.belief = Some(belief);
        self.coasting_since = None;
        self.aoa.clear();
        self.set_status(TrackerStatus::Tracking);
    }

    /// Drops the track after divergence so fusion can search again.
    pub fn reset(&mut self) {
        if self.status != TrackerStatus::Diverged {
            self.set_status(TrackerStatus::Diverged);
        }
        self.belief = None;
        self.aoa.clear();
        self.coasting_since = None;
        self.set_status(TrackerStatus::Uninitialized);
    }

    /// One 10 Hz cycle: predict to `t`, associate, update.
    pub fn cycle<R: Rng>(&mut self, t: f64, scan_world: &[Point3<f64>], wedge: Option<&Wedge>, rng: &mut R) -> CycleReport {
        let idle = CycleReport { status: self.status, measured: false, gated: false, n_points: 0 };
        if !self.status.is_active() {
            return idle;
        }
        let Some(prior) = self.belief.clone() else {
            return idle;
        };
        let mut predicted = prior.clone();
        let mut remaining = t - self.state_time;
        while remaining > 1e-9 {
            let dt = remaining.min(0.5);
            predicted = ekf_predict(&predicted, dt, &self.cfg.ekf).expect("step within range");
            remaining -= dt;
        }
        self.state_time = self.state_time.max(t);
        let displacement = predicted.position - prior.position;
        let matched = associate_leader_points(
            &prior.points,
            displacement,
            predicted.position,
            scan_world,
            wedge,
            &self.cfg.association,
            rng,
        );
        let shift = |pts: &[Point3<f64>]| -> Vec<Point3<f64>> {
            pts.iter().map(|p| Point3::new(p.x + displacement.x, p.y + displacement.y, p.z)).collect()
        };

        let mut report = CycleReport { status: self.status, measured: false, gated: false, n_points: matched.len() };
        let measurement = centroid(&matched).map(|c| Vector2::new(c.x, c.y));
        let outcome = measurement.map(|z| ekf_update(&predicted, z, t, &self.cfg.ekf).expect("finite centroid"));
        match outcome {
            Some(o) if o.accepted => {
                let mut b = o.belief;
                b.points = matched;
                self.last_known = Some(b.position);
                self.belief = Some(b);
                self.coasting_since = None;
                self.set_status(TrackerStatus::Tracking);
                report.measured = true;
            }
            other => {
                if other.is_some() {
                    report.gated = true;
                    log::debug!("t={t:.2}: leader measurement gated out");
                }
                predicted.points = shift(&prior.points);
                self.belief = Some(predicted);
                let since = *self.coasting_since.get_or_insert(t);
                if t - since >= self.cfg.coast_timeout {
                    self.set_status(TrackerStatus::Diverged);
                } else {
                    self.set_status(TrackerStatus::Coasting);
                }
            }
        }
        report.status = self.status;
        report
    }

    /// Records an AoA reading against the current belief bearing.
    pub fn record_aoa(&mut self, estimate: &AoAEstimate, robot: &Pose2) {
        let Some(b) = &self.belief else {
            return;
        };
        if !self.status.is_active() {
            return;
        }
        let belief_bearing = robot.bearing_to(nalgebra::Point2::from(b.position));
        self.aoa.push_back(AoaSample {
            t: estimate.timestamp,
            aoa: estimate.azimuth,
            belief_bearing,
            confident: !estimate.low_confidence,
        });
        let horizon = estimate.timestamp - 2.0 * self.cfg.divergence_window;
        while self.aoa.front().is_some_and(|s| s.t < horizon) {
            self.aoa.pop_front();
        }
    }

    /// Applies the AoA divergence rule; returns the resulting status.
    pub fn check_divergence(&mut self, now: f64) -> TrackerStatus {
        if self.status.is_active()
            && check_divergence(
                self.aoa.make_contiguous(),
                now,
                self.cfg.divergence_window,
                self.cfg.divergence_threshold_deg.to_radians(),
            )
        {
            log::info!("t={now:.2}: AoA and track disagree; leader selection restarts");
            self.set_status(TrackerStatus::Diverged);
        }
        self.status
    }

    pub fn record(&self, t: f64) -> TrackerRecord {
        match &self.belief {
            Some(b) => TrackerRecord {
                t,
                px: b.position.x,
                py: b.position.y,
                vx: b.velocity.x,
                vy: b.velocity.y,
                trace_p: b.covariance.trace(),
                status: self.status,
                n_points: b.points.len(),
            },
            None => TrackerRecord {
                t,
                px: f64::NAN,
                py: f64::NAN,
                vx: f64::NAN,
                vy: f64::NAN,
                trace_p: f64::NAN,
                status: self.status,
                n_points: 0,
            },
        }
    }
}
