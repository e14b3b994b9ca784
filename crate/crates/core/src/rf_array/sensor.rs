use std::collections::VecDeque;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{
    align_tdm, median_filter3, music, smoothed_covariance, AoAEstimate, ArrayGeometry, IqSnapshot,
    MusicPeak, PhaseModeTransform, Pseudospectrum, RfError, C64,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AoaConfig {
    pub ring_count: usize,
    pub carrier_freq: f64,
    pub mode_order: usize,
    pub n_subarrays: usize,
    pub n_sources: usize,
    pub grid_step_deg: f64,
    /// Aligned snapshots in the covariance window.
    pub window: usize,
    pub confidence_threshold: f64,
    pub median_filter: bool,
    /// Keep the last pseudospectrum for diagnostics.
    pub keep_spectrum: bool,
}

impl Default for AoaConfig {
    fn default() -> Self {
        Self {
            ring_count: 8,
            carrier_freq: 2.4e9,
            mode_order: 3,
            n_subarrays: 3,
            n_sources: 1,
            grid_step_deg: 0.5,
            window: 5,
            confidence_threshold: 2.0,
            median_filter: true,
            keep_spectrum: false,
        }
    }
}

/// Output of one sensor cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoaReading {
    /// Median-filtered, published estimate.
    pub estimate: AoAEstimate,
    /// Unfiltered MUSIC peak of this cycle.
    pub raw: MusicPeak,
}

/// Stateful AoA pipeline: align, transform, window, smooth, MUSIC, median.
#[derive(Debug, Clone)]
pub struct AoaSensor {
    config: AoaConfig,
    geometry: ArrayGeometry,
    transform: PhaseModeTransform,
    window: VecDeque<DVector<C64>>,
    raw_history: VecDeque<f64>,
    last_spectrum: Option<Pseudospectrum>,
}

impl AoaSensor {
    pub fn new(config: AoaConfig) -> Result<Self, RfError> {
        let geometry = ArrayGeometry::new(config.ring_count, config.carrier_freq)?;
        let transform = PhaseModeTransform::new(&geometry, config.mode_order)?;
        let len = transform.output_len();
        if config.n_subarrays == 0 || config.n_subarrays + 1 > len {
            return Err(RfError::SubarrayTooShort {
                len,
                n_subarrays: config.n_subarrays,
            });
        }
        if config.window == 0 {
            return Err(RfError::InsufficientHistory);
        }
        Ok(Self {
            config,
            geometry,
            transform,
            window: VecDeque::new(),
            raw_history: VecDeque::new(),
            last_spectrum: None,
        })
    }

    pub fn config(&self) -> &AoaConfig {
        &self.config
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn last_spectrum(&self) -> Option<&Pseudospectrum> {
        self.last_spectrum.as_ref()
    }

    pub fn reset(&mut self) {
        self.window.clear();
        self.raw_history.clear();
    }

    pub fn process(&mut self, snap: &IqSnapshot) -> Result<AoaReading, RfError> {
        snap.validate(self.geometry.ring_count())?;
        let aligned = align_tdm(snap)?;
        let beamspace = self.transform.apply(&aligned);
        if self.window.len() == self.config.window {
            self.window.pop_front();
        }
        self.window.push_back(beamspace);
        let history: Vec<DVector<C64>> = self.window.iter().cloned().collect();
        let cov = smoothed_covariance(&history, self.config.n_subarrays)?;
        let step = self.config.grid_step_deg.to_radians();
        let spectrum = music::pseudospectrum(&cov, self.config.n_sources, step)?;
        let raw = music::peak_of(&spectrum, step);
        if self.config.keep_spectrum {
            self.last_spectrum = Some(spectrum);
        }

        if self.raw_history.len() == 3 {
            self.raw_history.pop_front();
        }
        self.raw_history.push_back(raw.azimuth);
        let azimuth = if self.config.median_filter {
            median_filter3(self.raw_history.make_contiguous())
        } else {
            raw.azimuth
        };
        Ok(AoaReading {
            estimate: AoAEstimate {
                azimuth,
                confidence: raw.confidence,
                timestamp: snap.timestamp,
                low_confidence: raw.confidence < self.config.confidence_threshold,
            },
            raw,
        })
    }
}
