use nalgebra::{DMatrix, DVector};

use super::bessel::bessel_j;
use super::{ArrayGeometry, RfError, C64};

/// Smallest Bessel amplitude for which a phase mode counts as excited.
pub const MIN_MODE_EXCITATION: f64 = 1e-6;

/// Phase-mode (beamspace) transform of a circular array.
///
/// Maps the element-space vector onto `2M+1` phase modes `m = -M..=M`,
/// each normalized by its excitation `j^m·J_m(kr)`, so a plane wave from
/// azimuth θ lands on the Vandermonde manifold `e^{jmθ}` (up to the
/// aliased higher-order modes the ring cannot suppress).
#[derive(Debug, Clone)]
pub struct PhaseModeTransform {
    mode_order: usize,
    matrix: DMatrix<C64>,
}

impl PhaseModeTransform {
    pub fn new(geom: &ArrayGeometry, mode_order: usize) -> Result<Self, RfError> {
        Self::from_ring(geom.element_azimuths(), geom.electrical_radius(), mode_order)
    }

    fn from_ring(azimuths: &[f64], kr: f64, mode_order: usize) -> Result<Self, RfError> {
        let n = azimuths.len();
        let max_order = n.saturating_sub(1) / 2;
        if mode_order > max_order {
            return Err(RfError::ModeOrderTooHigh {
                mode_order,
                max: max_order,
            });
        }
        let len = 2 * mode_order + 1;
        let norm = (n as f64).sqrt();
        let mut matrix = DMatrix::zeros(len, n);
        for row in 0..len {
            let m = row as i32 - mode_order as i32;
            let excitation = C64::i().powi(m) * bessel_j(m, kr);
            if excitation.norm() < MIN_MODE_EXCITATION {
                return Err(RfError::UnexcitableMode { mode: m, kr });
            }
            for (col, phi) in azimuths.iter().enumerate() {
                matrix[(row, col)] = C64::from_polar(1.0, m as f64 * phi) / (norm * excitation);
            }
        }
        Ok(Self { mode_order, matrix })
    }

    pub fn mode_order(&self) -> usize {
        self.mode_order
    }

    /// Length of the virtual Vandermonde array, `2M+1`.
    pub fn output_len(&self) -> usize {
        2 * self.mode_order + 1
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn apply(&self, x: &DVector<C64>) -> DVector<C64> {
        &self.matrix * x
    }
}

/// Free-function form of [`PhaseModeTransform::apply`].
pub fn phase_mode_transform(
    x: &DVector<C64>,
    geom: &ArrayGeometry,
    mode_order: usize,
) -> Result<DVector<C64>, RfError> {
    Ok(PhaseModeTransform::new(geom, mode_order)?.apply(x))
}
