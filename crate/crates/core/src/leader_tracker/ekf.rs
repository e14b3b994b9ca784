use nalgebra::{Matrix2, Matrix2x4, Matrix4, Point3, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use super::TrackerError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EkfConfig {
    /// Position process noise density, m²/s.
    pub qp: f64,
    /// Velocity process noise density, m²/s³.
    pub qv: f64,
    /// Position measurement standard deviation.
    pub sigma_m: f64,
    /// χ² gate on the squared Mahalanobis innovation (2 dof, 99 %).
    pub gate: f64,
    pub init_pos_std: f64,
    pub init_vel_std: f64,
    pub max_speed: f64,
}

impl Default for EkfConfig {
    fn default() -> Self {
        Self {
            qp: 0.01,
            qv: 0.5,
            sigma_m: 0.1,
            gate: 9.21,
            init_pos_std: 0.2,
            init_vel_std: 0.5,
            max_speed: 3.0,
        }
    }
}

/// Planar constant-velocity leader state with its LiDAR point set.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderBelief {
    pub position: Vector2<f64>,
    pub velocity: Vector2<f64>,
    /// Covariance over `(px, py, vx, vy)`.
    pub covariance: Matrix4<f64>,
    /// Current leader points, world frame.
    pub points: Vec<Point3<f64>>,
    pub last_update: f64,
}

impl LeaderBelief {
    pub fn new(position: Vector2<f64>, velocity: Vector2<f64>, points: Vec<Point3<f64>>, t: f64, cfg: &EkfConfig) -> Self {
        let p = cfg.init_pos_std.powi(2);
        let v = cfg.init_vel_std.powi(2);
        let mut b = Self {
            position,
            velocity,
            covariance: Matrix4::from_diagonal(&Vector4::new(p, p, v, v)),
            points,
            last_update: t,
        };
        b.clamp_speed(cfg.max_speed);
        b
    }

    pub fn state(&self) -> Vector4<f64> {
        Vector4::new(self.position.x, self.position.y, self.velocity.x, self.velocity.y)
    }

    fn set_state(&mut self, x: &Vector4<f64>) {
        self.position = Vector2::new(x[0], x[1]);
        self.velocity = Vector2::new(x[2], x[3]);
    }

    fn clamp_speed(&mut self, max: f64) {
        let s = self.velocity.norm();
        if s > max {
            self.velocity *= max / s;
        }
    }

    /// Symmetric with eigenvalues ≥ −1e-9.
    pub fn covariance_is_valid(&self) -> bool {
        let p = &self.covariance;
        (p - p.transpose()).abs().max() < 1e-12 && p.symmetric_eigenvalues().min() >= -1e-9
    }
}

pub fn transition(dt: f64) -> Matrix4<f64> {
    let mut f = Matrix4::identity();
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;
    f
}

/// Constant-velocity prediction: `x ← F x`, `P ← F P Fᵀ + Q·dt`.
pub fn ekf_predict(belief: &LeaderBelief, dt: f64, cfg: &EkfConfig) -> Result<LeaderBelief, TrackerError> {
    if !(dt > 0.0 && dt <= 0.5) {
        return Err(TrackerError::PredictStep(dt));
    }
    let f = transition(dt);
    let q = Matrix4::from_diagonal(&Vector4::new(cfg.qp, cfg.qp, cfg.qv, cfg.qv)) * dt;
    let mut out = belief.clone();
    out.set_state(&(f * belief.state()));
    let p = f * belief.covariance * f.transpose() + q;
    out.covariance = (p + p.transpose()) * 0.5;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub belief: LeaderBelief,
    /// False when the innovation fell outside the gate; the state is then
    /// the prior unchanged.
    pub accepted: bool,
    pub mahalanobis_sq: f64,
}

/// Position update with `H = [I₂ 0]`, gated on the squared Mahalanobis
/// distance. The Joseph form keeps the covariance symmetric PSD.
pub fn ekf_update(belief: &LeaderBelief, z: Vector2<f64>, t: f64, cfg: &EkfConfig) -> Result<UpdateOutcome, TrackerError> {
    if !(z.x.is_finite() && z.y.is_finite()) {
        return Err(TrackerError::NonFiniteMeasurement);
    }
    let h = Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
    let r = Matrix2::identity() * cfg.sigma_m.powi(2);
    let p = &belief.covariance;
    let innovation = z - belief.position;
    let s = h * p * h.transpose() + r;
    let s_inv = s.try_inverse().ok_or(TrackerError::SingularInnovation)?;
    let d2 = (innovation.transpose() * s_inv * innovation)[0];
    if d2 > cfg.gate {
        return Ok(UpdateOutcome { belief: belief.clone(), accepted: false, mahalanobis_sq: d2 });
    }
    let k = p * h.transpose() * s_inv;
    let mut out = belief.clone();
    out.set_state(&(belief.state() + k * innovation));
    let i_kh = Matrix4::identity() - k * h;
    let joseph = i_kh * p * i_kh.transpose() + k * r * k.transpose();
    out.covariance = (joseph + joseph.transpose()) * 0.5;
    out.clamp_speed(cfg.max_speed);
    out.last_update = t;
    Ok(UpdateOutcome { belief: out, accepted: true, mahalanobis_sq: d2 })
}
