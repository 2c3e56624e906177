//! Constant-velocity Kalman filter over relative yaw and translation, with
//! exponential velocity decay while the marker is not detected.
//!
//! State layout: `(yaw, yaw_rate, tx, vx, ty, vy, tz, vz)` in deg, deg/s,
//! cm, cm/s. Measurements are `(yaw, tx, ty, tz)`.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::angle::wrap_deg;
use crate::geometry::RelPose;

pub type StateVector = SVector<f64, 8>;
pub type Covariance = SMatrix<f64, 8, 8>;
pub type Measurement = SVector<f64, 4>;

const YAW: usize = 0;
const VELOCITY_IDX: [usize; 4] = [1, 3, 5, 7];

/// Filter tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KfParams {
    /// Seconds per frame.
    pub dt: f64,
    /// Measurement noise factor, `R = k1 * I4`.
    pub k1: f64,
    /// Process noise factor, `Q = k2 * I8`.
    pub k2: f64,
    /// Velocity decay per missed frame.
    pub alpha: f64,
    /// Consecutive misses tolerated before the estimate goes stale.
    pub n_max: u32,
}

impl Default for KfParams {
    fn default() -> Self {
        Self {
            dt: 1.0 / 30.0,
            k1: 0.5,
            k2: 0.01,
            alpha: 0.85,
            n_max: 8,
        }
    }
}

impl KfParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(format!("kf dt must be positive, got {}", self.dt));
        }
        if !(self.k1 > 0.0 && self.k2 > 0.0) {
            return Err(format!("kf k1/k2 must be positive, got {}/{}", self.k1, self.k2));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(format!("kf alpha must be in (0, 1), got {}", self.alpha));
        }
        Ok(())
    }
}

/// Transition matrix: identity with `dt` coupling each position to its rate.
pub fn build_f(dt: f64) -> Covariance {
    let mut f = Covariance::identity();
    for i in 0..4 {
        f[(2 * i, 2 * i + 1)] = dt;
    }
    f
}

/// Measurement matrix selecting the four position-like states.
pub fn build_h() -> SMatrix<f64, 4, 8> {
    let mut h = SMatrix::<f64, 4, 8>::zeros();
    for i in 0..4 {
        h[(i, 2 * i)] = 1.0;
    }
    h
}

/// Converts a pose into the `(yaw, tx, ty, tz)` measurement vector.
pub fn measurement_of(pose: &RelPose) -> Measurement {
    Measurement::new(pose.yaw, pose.x, pose.y, pose.z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KfState {
    pub x_hat: StateVector,
    pub p: Covariance,
    /// Consecutive frames without a measurement.
    pub miss_count: u32,
    /// False once more than `n_max` frames have been missed.
    pub valid: bool,
}

impl KfState {
    /// Seeds the filter from a first measurement: positions from the
    /// measurement, zero velocities, `P0 = diag(k1, 10*k1, ...)`.
    pub fn from_measurement(pose: &RelPose, params: &KfParams) -> Self {
        let mut x_hat = StateVector::zeros();
        let z = measurement_of(pose);
        let mut p = Covariance::zeros();
        for i in 0..4 {
            x_hat[2 * i] = z[i];
            p[(2 * i, 2 * i)] = params.k1;
            p[(2 * i + 1, 2 * i + 1)] = 10.0 * params.k1;
        }
        x_hat[YAW] = wrap_deg(x_hat[YAW]);
        Self {
            x_hat,
            p,
            miss_count: 0,
            valid: true,
        }
    }

    /// The filtered pose.
    pub fn pose(&self) -> RelPose {
        RelPose::new(self.x_hat[2], self.x_hat[4], self.x_hat[6], self.x_hat[0])
    }

    /// `(yaw_rate, vx, vy, vz)`.
    pub fn velocities(&self) -> [f64; 4] {
        VELOCITY_IDX.map(|i| self.x_hat[i])
    }
}

/// Time update: `x <- F x`, `P <- F P F^T + Q`.
pub fn predict(state: &KfState, params: &KfParams) -> KfState {
    let f = build_f(params.dt);
    let mut x_hat = f * state.x_hat;
    x_hat[YAW] = wrap_deg(x_hat[YAW]);
    let p = f * state.p * f.transpose() + Covariance::identity() * params.k2;
    KfState {
        x_hat,
        p: symmetrize(&p),
        ..*state
    }
}

/// Measurement update with `R = k1 * I`. The yaw innovation is taken on the
/// shortest arc. Resets the miss counter and revalidates the estimate.
pub fn update(state: &KfState, z: &Measurement, params: &KfParams) -> KfState {
    let h = build_h();
    let r = SMatrix::<f64, 4, 4>::identity() * params.k1;
    let mut innovation = z - h * state.x_hat;
    innovation[0] = wrap_deg(innovation[0]);
    let s = h * state.p * h.transpose() + r;
    let s_inv = s
        .try_inverse()
        .expect("innovation covariance is positive definite when k1 > 0");
    let k = state.p * h.transpose() * s_inv;
    let mut x_hat = state.x_hat + k * innovation;
    x_hat[YAW] = wrap_deg(x_hat[YAW]);
    // Joseph form keeps P symmetric positive semi-definite.
    let i_kh = Covariance::identity() - k * h;
    let p = i_kh * state.p * i_kh.transpose() + k * r * k.transpose();
    KfState {
        x_hat,
        p: symmetrize(&p),
        miss_count: 0,
        valid: true,
    }
}

/// One frame: predict, then update if a measurement arrived. On a miss every
/// velocity is scaled by `alpha`; after more than `n_max` consecutive misses
/// the velocities are zeroed and the estimate is marked stale.
pub fn step(state: &KfState, measurement: Option<&RelPose>, params: &KfParams) -> KfState {
    let predicted = predict(state, params);
    match measurement {
        Some(pose) => update(&predicted, &measurement_of(pose), params),
        None => {
            let mut s = predicted;
            s.miss_count = s.miss_count.saturating_add(1);
            for i in VELOCITY_IDX {
                s.x_hat[i] *= params.alpha;
            }
            if s.miss_count > params.n_max {
                for i in VELOCITY_IDX {
                    s.x_hat[i] = 0.0;
                }
                s.valid = false;
            }
            s
        }
    }
}

fn symmetrize(p: &Covariance) -> Covariance {
    (p + p.transpose()) * 0.5
}

/// One filter per marker; uninitialized until the first detection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MarkerTracker {
    state: Option<KfState>,
}

impl MarkerTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> Option<&KfState> {
        self.state.as_ref()
    }

    /// Advances one frame. The first measurement seeds the filter.
    pub fn step(&mut self, measurement: Option<&RelPose>, params: &KfParams) {
        self.state = match (&self.state, measurement) {
            (None, None) => None,
            (None, Some(m)) => Some(KfState::from_measurement(m, params)),
            (Some(s), m) => Some(step(s, m, params)),
        };
    }

    /// Filtered pose while the estimate is valid.
    pub fn valid_pose(&self) -> Option<RelPose> {
        self.state.filter(|s| s.valid).map(|s| s.pose())
    }

    /// Filtered pose regardless of staleness.
    pub fn any_pose(&self) -> Option<RelPose> {
        self.state.map(|s| s.pose())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state_with(x: [f64; 8], params: &KfParams) -> KfState {
        let mut s = KfState::from_measurement(&RelPose::default(), params);
        s.x_hat = StateVector::from_row_slice(&x);
        s
    }

    #[test]
    fn transition_matrix_layout() {
        let f = build_f(0.1);
        for r in 0..8 {
            for c in 0..8 {
                let expect = if r == c {
                    1.0
                } else if r % 2 == 0 && c == r + 1 {
                    0.1
                } else {
                    0.0
                };
                assert_eq!(f[(r, c)], expect, "({r},{c})");
            }
        }
        assert_eq!(build_f(0.0), Covariance::identity());
    }

    #[test]
    fn transition_semigroup() {
        let lhs = build_f(0.03) * build_f(0.07);
        let rhs = build_f(0.1);
        assert!((lhs - rhs).abs().max() < 1e-15);
    }

    #[test]
    fn measurement_matrix_selects_positions() {
        let h = build_h();
        assert_eq!(h.iter().filter(|v| **v != 0.0).count(), 4);
        assert!(h.iter().all(|v| *v == 0.0 || *v == 1.0));
        let x = StateVector::from_row_slice(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert_eq!(h * x, Measurement::new(1.0, 3.0, 5.0, 7.0));
        let still = StateVector::from_row_slice(&[1.0, 0.0, 3.0, 0.0, 5.0, 0.0, 7.0, 0.0]);
        assert_eq!(h * build_f(0.5) * still, h * still);
    }

    #[test]
    fn predict_is_constant_velocity() {
        let params = KfParams { dt: 1.0, ..KfParams::default() };
        let s = state_with([0.0, 0.0, 10.0, 5.0, 0.0, 0.0, 20.0, -2.0], &params);
        let p = predict(&s, &params);
        let pose = p.pose();
        assert_eq!((pose.yaw, pose.x, pose.y, pose.z), (0.0, 15.0, 0.0, 18.0));
    }

    #[test]
    fn predict_zero_state_adds_process_noise() {
        let params = KfParams::default();
        let mut s = state_with([0.0; 8], &params);
        s.p = Covariance::zeros();
        let p = predict(&s, &params);
        assert_eq!(p.x_hat, StateVector::zeros());
        assert!((p.p - Covariance::identity() * params.k2).abs().max() < 1e-15);
        assert!(p.p.trace() > s.p.trace());
    }

    #[test]
    fn tiny_k1_tracks_measurement() {
        let params = KfParams { k1: 1e-9, ..KfParams::default() };
        let mut s = state_with([10.0, 0.0, 1.0, 0.0, 2.0, 0.0, 30.0, 0.0], &params);
        s.p = Covariance::identity() * 10.0;
        let out = update(&predict(&s, &params), &Measurement::new(-20.0, 4.0, -3.0, 25.0), &params);
        let pose = out.pose();
        assert!((pose.yaw + 20.0).abs() < 1e-6);
        assert!((pose.x - 4.0).abs() < 1e-6);
        assert!((pose.y + 3.0).abs() < 1e-6);
        assert!((pose.z - 25.0).abs() < 1e-6);
    }

    #[test]
    fn repeated_measurements_converge_with_shrinking_covariance() {
        let params = KfParams::default();
        let target = RelPose::new(2.0, -1.0, 30.0, 45.0);
        let seed = KfState::from_measurement(&RelPose::new(0.0, 0.0, 20.0, 0.0), &params);
        let h = build_h();

        // same instant, repeated fixes: measured-component variance never grows
        let mut s = seed;
        let mut prev = h * s.p * h.transpose();
        for k in 0..50 {
            s = update(&s, &measurement_of(&target), &params);
            let cur = h * s.p * h.transpose();
            for i in 0..4 {
                assert!(cur[(i, i)] <= prev[(i, i)] + 1e-12, "iteration {k}");
            }
            prev = cur;
        }

        // frame by frame on a stationary target the estimate converges
        let mut s = seed;
        for _ in 0..400 {
            s = step(&s, Some(&target), &params);
        }
        let e = s.pose().error_to(&target);
        assert!(e.iter().all(|v| v.abs() < 1e-3), "{e:?}");
    }

    #[test]
    fn one_miss_decays_velocity() {
        let params = KfParams::default();
        let s = state_with([0.0, 0.0, 0.0, 10.0, 0.0, 0.0, 0.0, 0.0], &params);
        let out = step(&s, None, &params);
        assert!((out.x_hat[3] - 8.5).abs() < 1e-12);
        assert_eq!(out.miss_count, 1);
        assert!(out.valid);
    }

    #[test]
    fn ninth_miss_freezes_and_invalidates() {
        let params = KfParams::default();
        let mut s = state_with([0.0, 4.0, 0.0, 10.0, 0.0, -6.0, 20.0, 3.0], &params);
        for _ in 0..8 {
            s = step(&s, None, &params);
        }
        assert!(s.valid);
        assert_eq!(s.miss_count, 8);
        assert!((s.x_hat[3] / 10.0 - 0.85f64.powi(8)).abs() < 1e-12);
        s = step(&s, None, &params);
        assert!(!s.valid);
        assert_eq!(s.velocities(), [0.0; 4]);
        // re-detection restores validity
        s = step(&s, Some(&RelPose::new(0.0, 1.0, 0.0, 20.0)), &params);
        assert!(s.valid);
        assert_eq!(s.miss_count, 0);
    }

    #[test]
    fn measured_step_is_predict_then_update() {
        let params = KfParams::default();
        let s = state_with([5.0, 1.0, 1.0, 2.0, 3.0, 0.5, 40.0, -1.0], &params);
        let m = RelPose::new(1.5, 3.1, 39.9, 5.2);
        let a = step(&s, Some(&m), &params);
        let b = update(&predict(&s, &params), &measurement_of(&m), &params);
        assert_eq!(a, b);
        assert_eq!(a.miss_count, 0);
    }

    #[test]
    fn yaw_does_not_jump_across_the_seam() {
        let params = KfParams::default();
        let mut tracker = MarkerTracker::new();
        let mut prev: Option<f64> = None;
        for k in 0..60 {
            // measurements alternate around +-180
            let yaw = if k % 2 == 0 { 179.0 } else { -179.0 };
            tracker.step(Some(&RelPose::new(0.0, 0.0, 20.0, yaw)), &params);
            let y = tracker.valid_pose().unwrap().yaw;
            assert!(y.abs() > 170.0, "filtered yaw {y} left the seam");
            if let Some(p) = prev {
                assert!(crate::angle::shortest_arc(p, y).abs() < 5.0);
            }
            prev = Some(y);
        }
    }
}
