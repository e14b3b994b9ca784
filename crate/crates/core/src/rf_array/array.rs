use std::f64::consts::{PI, TAU};

use nalgebra::{Complex, DVector};

use super::RfError;

pub type C64 = Complex<f64>;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Uniform circular array with a reference element at its center.
///
/// Element `i` sits at azimuth `2πi/ring_count`; the radius is chosen so
/// adjacent ring elements are half a wavelength apart.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    ring_count: usize,
    carrier_freq: f64,
    wavelength: f64,
    ring_radius: f64,
    element_azimuths: Vec<f64>,
}

impl ArrayGeometry {
    pub fn new(ring_count: usize, carrier_freq: f64) -> Result<Self, RfError> {
        if ring_count < 3 {
            return Err(RfError::InvalidGeometry(format!(
                "ring_count must be at least 3, got {ring_count}"
            )));
        }
        if !(carrier_freq.is_finite() && carrier_freq > 0.0) {
            return Err(RfError::InvalidGeometry(format!(
                "carrier frequency must be positive, got {carrier_freq}"
            )));
        }
        let wavelength = SPEED_OF_LIGHT / carrier_freq;
        let ring_radius = (wavelength / 2.0) / (2.0 * (PI / ring_count as f64).sin());
        let element_azimuths = (0..ring_count)
            .map(|i| TAU * i as f64 / ring_count as f64)
            .collect();
        Ok(Self {
            ring_count,
            carrier_freq,
            wavelength,
            ring_radius,
            element_azimuths,
        })
    }

    /// Eight ring elements at 2.4 GHz.
    pub fn standard() -> Self {
        Self::new(8, 2.4e9).expect("standard geometry is valid")
    }

    pub fn ring_count(&self) -> usize {
        self.ring_count
    }

    pub fn carrier_freq(&self) -> f64 {
        self.carrier_freq
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn ring_radius(&self) -> f64 {
        self.ring_radius
    }

    pub fn element_azimuths(&self) -> &[f64] {
        &self.element_azimuths
    }

    pub fn reference_at_center(&self) -> bool {
        true
    }

    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength
    }

    /// Electrical radius `k·r`.
    pub fn electrical_radius(&self) -> f64 {
        self.wavenumber() * self.ring_radius
    }

    /// Element position in the array frame (meters, planar).
    pub fn element_position(&self, i: usize) -> (f64, f64) {
        let (s, c) = self.element_azimuths[i].sin_cos();
        (self.ring_radius * c, self.ring_radius * s)
    }
}

/// Far-field array response; every entry has unit magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(DVector<C64>);

impl SteeringVector {
    pub fn entries(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<C64> {
        self.0
    }
}

/// Planar far-field manifold: `exp(j·k·r·cos(θ − φ_i))`.
pub fn steering_vector(geom: &ArrayGeometry, azimuth: f64) -> SteeringVector {
    let kr = geom.electrical_radius();
    SteeringVector(DVector::from_iterator(
        geom.ring_count,
        geom.element_azimuths
            .iter()
            .map(|phi| C64::from_polar(1.0, kr * (azimuth - phi).cos())),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjacent_chord_is_half_wavelength() {
        for n in [3, 5, 8, 12] {
            let g = ArrayGeometry::new(n, 2.4e9).unwrap();
            for i in 0..n {
                let (x0, y0) = g.element_position(i);
                let (x1, y1) = g.element_position((i + 1) % n);
                let chord = ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
                assert!((chord - g.wavelength() / 2.0).abs() < 1e-9);
            }
            assert!(g.element_azimuths().windows(2).all(|w| w[1] > w[0]));
            assert!(*g.element_azimuths().last().unwrap() < TAU);
        }
    }

    #[test]
    fn rejects_degenerate_rings() {
        assert!(ArrayGeometry::new(2, 2.4e9).is_err());
        assert!(ArrayGeometry::new(8, 0.0).is_err());
    }

    #[test]
    fn steering_unit_modulus() {
        let g = ArrayGeometry::standard();
        for deg in (-180..180).step_by(7) {
            let a = steering_vector(&g, (deg as f64).to_radians());
            assert!(a.entries().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn ring_rotation_is_cyclic_shift() {
        let g = ArrayGeometry::standard();
        let theta = 0.37;
        let a = steering_vector(&g, theta);
        let b = steering_vector(&g, theta + TAU / 8.0);
        for i in 0..8 {
            assert!((b.entries()[(i + 1) % 8] - a.entries()[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn broadside_entry_zero() {
        let g = ArrayGeometry::standard();
        let a = steering_vector(&g, 0.0);
        let expected = C64::from_polar(1.0, TAU * g.ring_radius() / g.wavelength());
        assert!((a.entries()[0] - expected).norm() < 1e-12);
    }
}
