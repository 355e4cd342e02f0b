//! Constant-velocity mobility and Kalman tracking of ground nodes.
//!
//! Node state is `s = [x, y, vx, vy]^T` with transition `s' = T s + w`,
//! `w ~ N(0, sigma_w^2 I4)`, and position-only measurements
//! `z = F s + u`, `u ~ N(0, sigma_u^2 I2)`. The filter is the standard
//! predict/update recursion for that model; the predicted covariance is
//! `T P T^T + sigma_w^2 I4`.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};

/// True kinematic state of one ground node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl NodeState {
    pub fn new(x: f64, y: f64, vx: f64, vy: f64) -> Self {
        NodeState { x, y, vx, vy }
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.x, self.y, self.vx, self.vy)
    }

    fn from_vector(v: &Vector4<f64>) -> Self {
        NodeState { x: v[0], y: v[1], vx: v[2], vy: v[3] }
    }
}

/// Gaussian state estimate of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanEstimate {
    pub mean: Vector4<f64>,
    pub covariance: Matrix4<f64>,
}

impl KalmanEstimate {
    pub fn position(&self) -> (f64, f64) {
        (self.mean[0], self.mean[1])
    }
}

/// Process/measurement noise levels and the step length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Process noise variance applied to every state component.
    pub sigma_w_sq: f64,
    /// Measurement noise variance per position coordinate.
    pub sigma_u_sq: f64,
    /// Step length in seconds.
    pub dt: f64,
}

impl NoiseParams {
    pub fn new(sigma_w_sq: f64, sigma_u_sq: f64, dt: f64) -> Result<Self> {
        if !(sigma_w_sq >= 0.0) {
            return Err(Error::invalid("sigma_w_sq", format!("must be >= 0, got {sigma_w_sq}")));
        }
        if !(sigma_u_sq >= 0.0) {
            return Err(Error::invalid("sigma_u_sq", format!("must be >= 0, got {sigma_u_sq}")));
        }
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
        }
        Ok(NoiseParams { sigma_w_sq, sigma_u_sq, dt })
    }
}

/// State transition matrix for one step.
pub fn transition(dt: f64) -> Matrix4<f64> {
    Matrix4::new(
        1.0, 0.0, dt, 0.0, //
        0.0, 1.0, 0.0, dt, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    )
}

/// Position measurement selector.
pub fn measurement_matrix() -> Matrix2x4<f64> {
    Matrix2x4::new(
        1.0, 0.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0,
    )
}

/// Advance the true node state one step with process noise.
pub fn mobility_step<R: Rng + ?Sized>(state: &NodeState, noise: &NoiseParams, rng: &mut R) -> NodeState {
    let sd = noise.sigma_w_sq.sqrt();
    let mut v = transition(noise.dt) * state.to_vector();
    for k in 0..4 {
        let n: f64 = rng.sample(StandardNormal);
        v[k] += sd * n;
    }
    NodeState::from_vector(&v)
}

/// Noisy position measurement of the true state.
pub fn measure<R: Rng + ?Sized>(state: &NodeState, noise: &NoiseParams, rng: &mut R) -> Vector2<f64> {
    let sd = noise.sigma_u_sq.sqrt();
    let nx: f64 = rng.sample(StandardNormal);
    let ny: f64 = rng.sample(StandardNormal);
    Vector2::new(state.x + sd * nx, state.y + sd * ny)
}

/// Kalman time update.
pub fn kf_predict(estimate: &KalmanEstimate, noise: &NoiseParams) -> KalmanEstimate {
    let t = transition(noise.dt);
    let mean = t * estimate.mean;
    let covariance = t * estimate.covariance * t.transpose() + Matrix4::identity() * noise.sigma_w_sq;
    KalmanEstimate { mean, covariance }
}

/// Kalman measurement update. Re-symmetrizes the posterior covariance so that
/// repeated cycles cannot drift away from symmetry.
pub fn kf_update(predicted: &KalmanEstimate, z: &Vector2<f64>, noise: &NoiseParams) -> Result<KalmanEstimate> {
    let f = measurement_matrix();
    let p = predicted.covariance;
    let s: Matrix2<f64> = f * p * f.transpose() + Matrix2::identity() * noise.sigma_u_sq;
    let s_inv = s.try_inverse().ok_or(Error::SingularInnovation)?;
    let gain = p * f.transpose() * s_inv;
    let innovation = z - f * predicted.mean;
    let mean = predicted.mean + gain * innovation;
    let cov = (Matrix4::identity() - gain * f) * p;
    let covariance = (cov + cov.transpose()) * 0.5;
    Ok(KalmanEstimate { mean, covariance })
}

/// Initial estimate: exact position, configured velocity guess, and a
/// diagonal covariance that is certain about position but carries
/// `sigma_v0_sq` of velocity uncertainty per axis.
pub fn initial_estimate(position: (f64, f64), velocity: (f64, f64), sigma_v0_sq: f64) -> KalmanEstimate {
    KalmanEstimate {
        mean: Vector4::new(position.0, position.1, velocity.0, velocity.1),
        covariance: Matrix4::from_diagonal(&Vector4::new(0.0, 0.0, sigma_v0_sq, sigma_v0_sq)),
    }
}
