//! Leader tracking at 10 Hz: constant-velocity EKF over the leader's planar
//! position, LiDAR point association with plane removal and outlier
//! rejection, and an AoA divergence monitor.

mod association;
mod divergence;
mod ekf;
mod grid;
mod ransac;
mod tracker;

use thiserror::Error;

pub use association::{associate_leader_points, centroid, reject_farthest, AssociationConfig, Wedge};
pub use divergence::{check_divergence, AoaSample};
pub use ekf::{ekf_predict, ekf_update, transition, EkfConfig, LeaderBelief, UpdateOutcome};
pub use grid::HashGrid;
pub use ransac::{remove_planes, Plane, RansacConfig};
pub use tracker::{CycleReport, LeaderTracker, TrackerConfig, TrackerRecord, TrackerStatus};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackerError {
    #[error("prediction step {0} s is outside (0, 0.5]")]
    PredictStep(f64),
    #[error("measurement is not finite")]
    NonFiniteMeasurement,
    #[error("innovation covariance is singular")]
    SingularInnovation,
}
