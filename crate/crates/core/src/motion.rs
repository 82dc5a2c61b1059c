//! Constant-velocity Kalman filter over `(cx, cy, a, h)` box state.
//!
//! The state is center x/y, aspect ratio (width / height), height and their
//! per-frame velocities. Noise magnitudes scale with the box height so the
//! filter behaves the same for near and far pedestrians.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::geometry::BBox;

pub type StateVector = SVector<f64, 8>;
pub type StateCovariance = SMatrix<f64, 8, 8>;
type Measurement = SVector<f64, 4>;
type MeasurementCovariance = SMatrix<f64, 4, 4>;

/// 0.95 quantile of the chi-square distribution with 4 degrees of freedom.
pub const CHI2_95_4DOF: f64 = 9.4877;
/// 0.95 quantile of the chi-square distribution with 2 degrees of freedom.
pub const CHI2_95_2DOF: f64 = 5.9915;

/// Floor applied to aspect ratio and height after every correction.
const MIN_SHAPE: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct MotionConfig {
    pub std_weight_position: f64,
    pub std_weight_velocity: f64,
    /// Gate on center only (2 dof) instead of center and shape (4 dof).
    pub gate_position_only: bool,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            std_weight_position: 1.0 / 20.0,
            std_weight_velocity: 1.0 / 160.0,
            gate_position_only: false,
        }
    }
}

impl MotionConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.std_weight_position > 0.0 && self.std_weight_position.is_finite()) {
            v.push(format!("std_weight_position {} must be positive", self.std_weight_position));
        }
        if !(self.std_weight_velocity > 0.0 && self.std_weight_velocity.is_finite()) {
            v.push(format!("std_weight_velocity {} must be positive", self.std_weight_velocity));
        }
        v
    }

    pub fn gate_threshold(&self) -> f64 {
        if self.gate_position_only {
            CHI2_95_2DOF
        } else {
            CHI2_95_4DOF
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: StateVector,
    pub covariance: StateCovariance,
}

impl KalmanState {
    pub fn bbox(&self) -> BBox {
        BBox::from_xyah(self.mean[0], self.mean[1], self.mean[2], self.mean[3])
    }

    pub fn center(&self) -> (f64, f64) {
        (self.mean[0], self.mean[1])
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KalmanFilter {
    cfg: MotionConfig,
}

fn measurement_of(b: &BBox) -> Measurement {
    let [cx, cy, a, h] = b.to_xyah();
    Measurement::new(cx, cy, a, h)
}

fn symmetrize(p: &mut StateCovariance) {
    *p = (*p + p.transpose()) * 0.5;
}

impl KalmanFilter {
    pub fn new(cfg: MotionConfig) -> Self {
        Self { cfg }
    }

    pub fn config(&self) -> &MotionConfig {
        &self.cfg
    }

    pub fn initiate(&self, measurement: &BBox) -> Result<KalmanState> {
        measurement.validate()?;
        let z = measurement_of(measurement);
        let h = z[3];
        let wp = self.cfg.std_weight_position;
        let wv = self.cfg.std_weight_velocity;
        let std = [
            2.0 * wp * h,
            2.0 * wp * h,
            1e-2,
            2.0 * wp * h,
            10.0 * wv * h,
            10.0 * wv * h,
            1e-5,
            10.0 * wv * h,
        ];
        let mut mean = StateVector::zeros();
        mean.fixed_rows_mut::<4>(0).copy_from(&z);
        let covariance = StateCovariance::from_diagonal(&StateVector::from_fn(|i, _| std[i] * std[i]));
        Ok(KalmanState { mean, covariance })
    }

    fn transition() -> StateCovariance {
        let mut f = StateCovariance::identity();
        for i in 0..4 {
            f[(i, i + 4)] = 1.0;
        }
        f
    }

    fn observation() -> SMatrix<f64, 4, 8> {
        SMatrix::<f64, 4, 8>::identity()
    }

    pub fn predict(&self, state: &KalmanState) -> KalmanState {
        let h = state.mean[3];
        let wp = self.cfg.std_weight_position;
        let wv = self.cfg.std_weight_velocity;
        let std = [wp * h, wp * h, 1e-2, wp * h, wv * h, wv * h, 1e-5, wv * h];
        let q = StateCovariance::from_diagonal(&StateVector::from_fn(|i, _| std[i] * std[i]));
        let f = Self::transition();
        let mean = f * state.mean;
        let mut covariance = f * state.covariance * f.transpose() + q;
        symmetrize(&mut covariance);
        KalmanState { mean, covariance }
    }

    /// Projects the state into measurement space: innovation mean and covariance.
    fn project(&self, state: &KalmanState) -> (Measurement, MeasurementCovariance) {
        let h = state.mean[3];
        let wp = self.cfg.std_weight_position;
        let std = [wp * h, wp * h, 1e-1, wp * h];
        let r = MeasurementCovariance::from_diagonal(&Measurement::from_fn(|i, _| std[i] * std[i]));
        let hm = Self::observation();
        let mean = hm * state.mean;
        let cov = hm * state.covariance * hm.transpose() + r;
        (mean, cov)
    }

    pub fn update(&self, state: &KalmanState, measurement: &BBox) -> Result<KalmanState> {
        measurement.validate()?;
        let (projected, s) = self.project(state);
        let chol = s
            .cholesky()
            .ok_or(Error::Numerical("innovation covariance is not positive definite"))?;
        let hm = Self::observation();
        // K = P H^T S^-1, computed as (S^-1 H P)^T since S and P are symmetric.
        let pht = state.covariance * hm.transpose();
        let gain = chol.solve(&pht.transpose()).transpose();
        let innovation = measurement_of(measurement) - projected;
        let mut mean = state.mean + gain * innovation;
        mean[2] = mean[2].max(MIN_SHAPE);
        mean[3] = mean[3].max(MIN_SHAPE);
        let mut covariance = state.covariance - gain * s * gain.transpose();
        symmetrize(&mut covariance);
        Ok(KalmanState { mean, covariance })
    }

    /// Squared Mahalanobis distance of `measurement` under the state's predicted
    /// distribution, over `(cx, cy, a, h)` or `(cx, cy)` per configuration.
    pub fn gating_distance(&self, state: &KalmanState, measurement: &BBox) -> Result<f64> {
        let (projected, s) = self.project(state);
        let d = measurement_of(measurement) - projected;
        if self.cfg.gate_position_only {
            let s2 = s.fixed_view::<2, 2>(0, 0).into_owned();
            let d2 = d.fixed_rows::<2>(0).into_owned();
            let chol = s2
                .cholesky()
                .ok_or(Error::Numerical("singular innovation covariance"))?;
            Ok(d2.dot(&chol.solve(&d2)))
        } else {
            let chol = s
                .cholesky()
                .ok_or(Error::Numerical("singular innovation covariance"))?;
            Ok(d.dot(&chol.solve(&d)))
        }
    }
}
