use nalgebra::{DMatrix, SMatrix, SVector, SymmetricEigen};

/// Singular-value cutoff of the resolve pseudo-inverse.
pub const PINV_CUTOFF: f64 = 1e-8;

/// Riemannian motion policy: desired acceleration with its importance metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyOutput<const D: usize> {
    pub accel: SVector<f64, D>,
    pub metric: SMatrix<f64, D, D>,
}

pub type Se2Policy = PolicyOutput<3>;

impl<const D: usize> PolicyOutput<D> {
    pub fn new(accel: SVector<f64, D>, metric: SMatrix<f64, D, D>) -> Self {
        Self { accel, metric }
    }

    pub fn zero() -> Self {
        Self { accel: SVector::zeros(), metric: SMatrix::zeros() }
    }

    /// Natural-form force `A·a`.
    pub fn force(&self) -> SVector<f64, D> {
        self.metric * self.accel
    }

    pub fn is_valid(&self) -> bool {
        let sym = (self.metric - self.metric.transpose()).abs().max() <= 1e-9 * (1.0 + self.metric.abs().max());
        let finite = self.accel.iter().chain(self.metric.iter()).all(|v| v.is_finite());
        finite && sym && min_eigenvalue(&self.metric) >= -1e-9 * (1.0 + self.metric.abs().max())
    }
}

fn min_eigenvalue<const D: usize>(m: &SMatrix<f64, D, D>) -> f64 {
    let dm = DMatrix::from_column_slice(D, D, m.as_slice());
    SymmetricEigen::new((&dm + dm.transpose()) * 0.5).eigenvalues.min()
}

/// Pseudo-inverse of a symmetric matrix; eigenvalues with magnitude at or
/// below the cutoff are treated as zero.
pub fn symmetric_pinv<const D: usize>(m: &SMatrix<f64, D, D>, cutoff: f64) -> SMatrix<f64, D, D> {
    let dm = DMatrix::from_column_slice(D, D, m.as_slice());
    let eig = SymmetricEigen::new((&dm + dm.transpose()) * 0.5);
    let mut out = DMatrix::zeros(D, D);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l.abs() > cutoff {
            let v = eig.eigenvectors.column(i);
            out += v * v.transpose() / l;
        }
    }
    SMatrix::from_column_slice(out.as_slice())
}

/// Metric-weighted resolve `a* = (Σ Aᵢ)⁺ Σ Aᵢ aᵢ`. The returned policy
/// carries the summed metric. All-zero metrics resolve to zero.
pub fn combine<const D: usize>(policies: &[PolicyOutput<D>]) -> PolicyOutput<D> {
    let mut metric = SMatrix::<f64, D, D>::zeros();
    let mut force = SVector::<f64, D>::zeros();
    for p in policies {
        metric += p.metric;
        force += p.force();
    }
    if metric.iter().all(|v| *v == 0.0) {
        if !policies.is_empty() {
            log::trace!("all policy metrics are zero; resolving to zero acceleration");
        }
        return PolicyOutput::zero();
    }
    PolicyOutput { accel: symmetric_pinv(&metric, PINV_CUTOFF) * force, metric }
}

/// Pullback through a constant Jacobian `J` (task = J·config): metric
/// `JᵀAJ`, natural force `JᵀAf`. The acceleration is returned in canonical
/// form, `(JᵀAJ)⁺ JᵀAf`, so that `metric·accel` reproduces the natural force.
pub fn pullback<const N: usize, const M: usize>(policy: &PolicyOutput<N>, jacobian: &SMatrix<f64, N, M>) -> PolicyOutput<M> {
    let metric = jacobian.transpose() * policy.metric * jacobian;
    let metric = (metric + metric.transpose()) * 0.5;
    let force = jacobian.transpose() * policy.metric * policy.accel;
    PolicyOutput { accel: symmetric_pinv(&metric, PINV_CUTOFF) * force, metric }
}

/// Planar task map into the 3D workspace: `(x, y, yaw) ↦ (x, y, z₀)`.
pub fn se2_to_r3_jacobian() -> SMatrix<f64, 3, 3> {
    SMatrix::<f64, 3, 3>::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0)
}

/// Workspace policy mapped into SE(2); height is not controlled.
pub fn pullback_to_se2(policy: &PolicyOutput<3>) -> Se2Policy {
    pullback(policy, &se2_to_r3_jacobian())
}

/// Planar position policy mapped into SE(2).
pub fn position_to_se2(policy: &PolicyOutput<2>) -> Se2Policy {
    pullback(policy, &SMatrix::<f64, 2, 3>::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0))
}

/// Heading policy mapped into SE(2).
pub fn yaw_to_se2(policy: &PolicyOutput<1>) -> Se2Policy {
    pullback(policy, &SMatrix::<f64, 1, 3>::new(0.0, 0.0, 1.0))
}
