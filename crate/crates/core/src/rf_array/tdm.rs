use nalgebra::DVector;

use super::{RfError, C64};

/// Minimum samples per TDM slot.
pub const MIN_SLOT_SAMPLES: usize = 16;

/// One switched measurement cycle: each ring antenna occupies one slot,
/// while the center reference antenna is sampled coherently alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct IqSnapshot {
    pub slot_samples: Vec<Vec<C64>>,
    pub reference_samples: Vec<Vec<C64>>,
    /// Switch jitter injected by the simulator. Never read by the estimator.
    pub slot_phase_jitter: Vec<f64>,
    pub timestamp: f64,
}

impl IqSnapshot {
    pub fn validate(&self, ring_count: usize) -> Result<(), RfError> {
        if self.slot_samples.len() != ring_count || self.reference_samples.len() != ring_count {
            return Err(RfError::MalformedSnapshot(format!(
                "expected {ring_count} slots, got {} array / {} reference",
                self.slot_samples.len(),
                self.reference_samples.len()
            )));
        }
        for (i, (x, r)) in self
            .slot_samples
            .iter()
            .zip(&self.reference_samples)
            .enumerate()
        {
            if x.len() != r.len() || x.len() < MIN_SLOT_SAMPLES {
                return Err(RfError::MalformedSnapshot(format!(
                    "slot {i}: {} array vs {} reference samples (need equal, >= {MIN_SLOT_SAMPLES})",
                    x.len(),
                    r.len()
                )));
            }
        }
        Ok(())
    }
}

/// Reference-aligned pseudo-coherent array vector.
///
/// Each slot is multiplied element-wise by the conjugate reference and
/// averaged, so any phase common to a slot's array and reference samples
/// cancels exactly.
pub fn align_tdm(snap: &IqSnapshot) -> Result<DVector<C64>, RfError> {
    let n = snap.slot_samples.len();
    snap.validate(n)?;
    let mut out = DVector::zeros(n);
    for (i, (x, r)) in snap.slot_samples.iter().zip(&snap.reference_samples).enumerate() {
        let energy: f64 = r.iter().map(|z| z.norm_sqr()).sum();
        if !(energy > 0.0) {
            return Err(RfError::DegenerateReference { slot: i });
        }
        let acc: C64 = x.iter().zip(r).map(|(a, b)| a * b.conj()).sum();
        out[i] = acc / x.len() as f64;
    }
    Ok(out)
}
