use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{RfError, C64};
use crate::geometry::wrap_angle;

/// Sample covariance of the history, forward spatially smoothed over
/// `n_subarrays` overlapping subarrays of length `L − n_subarrays + 1`.
pub fn smoothed_covariance(
    history: &[DVector<C64>],
    n_subarrays: usize,
) -> Result<DMatrix<C64>, RfError> {
    let first = history.first().ok_or(RfError::InsufficientHistory)?;
    let len = first.len();
    if n_subarrays == 0 || n_subarrays > len || len - n_subarrays + 1 < 2 {
        return Err(RfError::SubarrayTooShort {
            len,
            n_subarrays,
        });
    }
    if history.iter().any(|v| v.len() != len) {
        return Err(RfError::MalformedSnapshot(
            "history vectors differ in length".into(),
        ));
    }
    let mut full = DMatrix::<C64>::zeros(len, len);
    for v in history {
        full += v * v.adjoint();
    }
    full /= C64::from(history.len() as f64);

    let sub = len - n_subarrays + 1;
    let mut smoothed = DMatrix::<C64>::zeros(sub, sub);
    for s in 0..n_subarrays {
        smoothed += full.view((s, s), (sub, sub));
    }
    smoothed /= C64::from(n_subarrays as f64);
    Ok(smoothed)
}

/// Vandermonde manifold `e^{jkθ}`, `k = 0..len`.
pub fn vandermonde(len: usize, theta: f64) -> DVector<C64> {
    DVector::from_iterator(len, (0..len).map(|k| C64::from_polar(1.0, k as f64 * theta)))
}

/// MUSIC pseudospectrum sampled on a uniform azimuth grid over `[-π, π)`.
#[derive(Debug, Clone)]
pub struct Pseudospectrum {
    pub azimuths: Vec<f64>,
    pub power: Vec<f64>,
    /// `a^H E_n E_n^H a` per grid point; the power is its reciprocal.
    null_spectrum: Vec<f64>,
}

impl Pseudospectrum {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "theta_deg,power")?;
        for (t, p) in self.azimuths.iter().zip(&self.power) {
            writeln!(out, "{:.3},{:.9e}", t.to_degrees(), p)?;
        }
        Ok(())
    }
}

const NULL_FLOOR: f64 = 1e-12;

pub fn pseudospectrum(
    cov: &DMatrix<C64>,
    n_sources: usize,
    grid_step: f64,
) -> Result<Pseudospectrum, RfError> {
    let dim = cov.nrows();
    if cov.ncols() != dim || n_sources == 0 || n_sources >= dim {
        return Err(RfError::SourceCount { n_sources, dim });
    }
    if !(grid_step > 0.0 && grid_step <= PI) {
        return Err(RfError::InvalidGrid(grid_step));
    }
    if cov.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(RfError::Eigendecomposition);
    }
    // symmetrize against round-off before the Hermitian solver
    let herm = (cov + cov.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::try_new(herm, f64::EPSILON, 0).ok_or(RfError::Eigendecomposition)?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let noise_dim = dim - n_sources;
    let noise: Vec<DVector<C64>> = order[..noise_dim]
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();

    let steps = (2.0 * PI / grid_step).round() as usize;
    let mut azimuths = Vec::with_capacity(steps);
    let mut null_spectrum = Vec::with_capacity(steps);
    for k in 0..steps {
        let theta = -PI + k as f64 * grid_step;
        let a = vandermonde(dim, theta);
        let q: f64 = noise.iter().map(|e| e.dotc(&a).norm_sqr()).sum();
        azimuths.push(theta);
        null_spectrum.push(q);
    }
    let power = null_spectrum.iter().map(|q| 1.0 / q.max(NULL_FLOOR)).collect();
    Ok(Pseudospectrum {
        azimuths,
        power,
        null_spectrum,
    })
}

/// Peak of a MUSIC pseudospectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MusicPeak {
    pub azimuth: f64,
    /// Peak-to-mean ratio of the pseudospectrum.
    pub confidence: f64,
}

/// Grid search for the pseudospectrum maximum, refined by a three-point
/// parabola through the null spectrum around the winning bin.
pub fn music_estimate(
    cov: &DMatrix<C64>,
    n_sources: usize,
    grid_step: f64,
) -> Result<MusicPeak, RfError> {
    let spec = pseudospectrum(cov, n_sources, grid_step)?;
    Ok(peak_of(&spec, grid_step))
}

pub(crate) fn peak_of(spec: &Pseudospectrum, grid_step: f64) -> MusicPeak {
    let n = spec.power.len();
    let best = spec
        .null_spectrum
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let q = &spec.null_spectrum;
    let (left, mid, right) = (q[(best + n - 1) % n], q[best], q[(best + 1) % n]);
    let curvature = left - 2.0 * mid + right;
    let offset = if curvature > 0.0 {
        (0.5 * (left - right) / curvature).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let mean = spec.power.iter().sum::<f64>() / n as f64;
    MusicPeak {
        azimuth: wrap_angle(spec.azimuths[best] + offset * grid_step),
        confidence: spec.power[best] / mean,
    }
}
