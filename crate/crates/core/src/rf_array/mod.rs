//! RF angle-of-arrival sensing: TDM reference alignment, phase-mode
//! beamspace transform, spatially smoothed MUSIC and a circular median.

mod array;
mod beamspace;
pub mod bessel;
mod median;
mod music;
mod sensor;
mod tdm;

use thiserror::Error;

pub use array::{steering_vector, ArrayGeometry, SteeringVector, C64, SPEED_OF_LIGHT};
pub use beamspace::{phase_mode_transform, PhaseModeTransform, MIN_MODE_EXCITATION};
pub use median::median_filter3;
pub use music::{music_estimate, pseudospectrum, smoothed_covariance, vandermonde, MusicPeak, Pseudospectrum};
pub use sensor::{AoaConfig, AoaReading, AoaSensor};
pub use tdm::{align_tdm, IqSnapshot, MIN_SLOT_SAMPLES};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RfError {
    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),
    #[error("malformed snapshot: {0}")]
    MalformedSnapshot(String),
    #[error("reference slot {slot} carries no energy")]
    DegenerateReference { slot: usize },
    #[error("mode order {mode_order} exceeds the ring limit {max}")]
    ModeOrderTooHigh { mode_order: usize, max: usize },
    #[error("phase mode {mode} is unexcitable at kr = {kr:.4}")]
    UnexcitableMode { mode: i32, kr: f64 },
    #[error("covariance needs at least one snapshot")]
    InsufficientHistory,
    #[error("{n_subarrays} subarrays over a length-{len} virtual array leave fewer than 2 elements")]
    SubarrayTooShort { len: usize, n_subarrays: usize },
    #[error("{n_sources} sources do not fit a {dim}x{dim} covariance")]
    SourceCount { n_sources: usize, dim: usize },
    #[error("grid step {0} rad is out of range")]
    InvalidGrid(f64),
    #[error("eigendecomposition failed (non-finite covariance)")]
    Eigendecomposition,
}

/// Published beacon bearing in the array (robot) frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoAEstimate {
    /// Radians in `[-π, π)`.
    pub azimuth: f64,
    /// Pseudospectrum peak-to-mean ratio.
    pub confidence: f64,
    pub timestamp: f64,
    /// Below the confidence threshold; downstream consumers skip it.
    pub low_confidence: bool,
}
