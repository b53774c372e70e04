//! Continuous-discrete extended Kalman filter over the coordinated-turn model.
//!
//! Prediction integrates the turn dynamics with RK4 and the covariance with
//! first-order substeps of `Ṗ = A·P + P·Aᵀ + Q` in congruence form. Correction uses the
//! identity measurement model, so `C = I` and the gain is `P·(R + P)⁻¹`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::CurvatureEstimate;
use crate::linalg::{Mat2, Vec2};
use crate::model::{
    f_dynamics, h_measure, jacobian_a, jacobian_c, InputVector, Measurement, TargetState,
    TurnDirection,
};

pub const DEFAULT_SUBSTEP: f64 = 0.01;
pub const DT_TOLERANCE: f64 = 1e-6;
/// Symmetry tolerance (relative to the largest entry) for user-supplied covariances.
const SYMMETRY_TOL: f64 = 1e-9;

/// Process and measurement noise covariances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Continuous-time process noise intensity (m²/s).
    pub q: Mat2,
    /// Measurement noise covariance (m²).
    pub r: Mat2,
}

impl NoiseConfig {
    pub fn new(q: Mat2, r: Mat2) -> Result<Self> {
        check_symmetric(&q, "Q")?;
        check_symmetric(&r, "R")?;
        let (q_min, _) = q.sym_eigenvalues();
        if q_min < 0.0 {
            return Err(Error::BadCovariance(format!(
                "Q has negative eigenvalue {q_min:e}"
            )));
        }
        let (r_min, _) = r.sym_eigenvalues();
        if !(r_min > 0.0) {
            return Err(Error::BadCovariance(format!(
                "R must be positive definite, min eigenvalue {r_min:e}"
            )));
        }
        Ok(NoiseConfig { q, r })
    }
}

fn check_symmetric(m: &Mat2, name: &str) -> Result<()> {
    if !m.is_finite() {
        return Err(Error::BadCovariance(format!(
            "{name} has non-finite entries"
        )));
    }
    if m.asymmetry() > SYMMETRY_TOL {
        return Err(Error::BadCovariance(format!("{name} is not symmetric")));
    }
    Ok(())
}

/// Numerical options for the filter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EkfConfig {
    /// Longest integration substep (s).
    pub substep: f64,
    /// Use `(I−L)P(I−L)ᵀ + L·R·Lᵀ` instead of `(I−L)P`.
    pub joseph: bool,
    /// Allowed mismatch between measurement and filter time (s).
    pub dt_tolerance: f64,
}

impl Default for EkfConfig {
    fn default() -> Self {
        EkfConfig {
            substep: DEFAULT_SUBSTEP,
            joseph: false,
            dt_tolerance: DT_TOLERANCE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    pub x_hat: TargetState,
    pub p: Mat2,
    pub t: f64,
    pub initialized: bool,
}

impl FilterState {
    pub fn uninitialized() -> Self {
        FilterState {
            x_hat: TargetState::default(),
            p: Mat2::ZERO,
            t: f64::NAN,
            initialized: false,
        }
    }
}

/// Motion model used for one propagation interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MotionInput {
    /// No motion estimate available yet; the state is held.
    Stationary,
    /// Constant velocity with `A = 0`.
    Straight { velocity: Vec2 },
    /// Coordinated turn about a curvature center.
    Turn(InputVector),
}

impl MotionInput {
    /// Motion input implied by a curvature estimate, or `Stationary` when none.
    pub fn from_curvature(est: Option<&CurvatureEstimate>) -> Result<Self> {
        let Some(est) = est else {
            return Ok(MotionInput::Stationary);
        };
        match est.center {
            Some(center) if !est.straight_line => Ok(MotionInput::Turn(InputVector::with_turn(
                est.speed,
                center,
                TurnDirection::from_angle(est.delta),
            )?)),
            _ => Ok(MotionInput::Straight {
                velocity: est.heading.scale(est.speed),
            }),
        }
    }

    fn velocity(&self, x: &TargetState) -> Result<Vec2> {
        match self {
            MotionInput::Stationary => Ok(Vec2::ZERO),
            MotionInput::Straight { velocity } => Ok(*velocity),
            MotionInput::Turn(u) => f_dynamics(x, u),
        }
    }

    fn jacobian(&self, x: &TargetState) -> Result<Mat2> {
        match self {
            MotionInput::Turn(u) => jacobian_a(x, u),
            _ => Ok(Mat2::ZERO),
        }
    }
}

/// What happened during one filter cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub predicted: TargetState,
    pub prior_cov: Mat2,
    pub corrected: Option<TargetState>,
    pub gain: Option<Mat2>,
    pub innovation: Option<Vec2>,
    pub posterior_cov: Option<Mat2>,
    pub input: MotionInput,
}

/// A measurement or a missed measurement at a given time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Event {
    Measurement(Measurement),
    Dropout(f64),
}

impl Event {
    pub fn t(&self) -> f64 {
        match self {
            Event::Measurement(m) => m.t,
            Event::Dropout(t) => *t,
        }
    }
}

/// Number of equal substeps no longer than `h` that cover `dt`.
fn substep_count(dt: f64, h: f64) -> usize {
    // Shave a relative hair so 0.2 / 0.01 is 20 steps, not 21.
    ((dt / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ekf {
    pub noise: NoiseConfig,
    pub config: EkfConfig,
}

impl Ekf {
    pub fn new(noise: NoiseConfig, config: EkfConfig) -> Result<Self> {
        if !(config.substep > 0.0) || !(config.dt_tolerance >= 0.0) {
            return Err(Error::InvalidArgument(
                "substep must be > 0 and dt_tolerance >= 0".into(),
            ));
        }
        Ok(Ekf { noise, config })
    }

    pub fn init_from_measurement(&self, m: &Measurement, p0: Mat2) -> Result<FilterState> {
        check_symmetric(&p0, "P0")?;
        let (lo, _) = p0.sym_eigenvalues();
        if !(lo > 0.0) {
            return Err(Error::BadCovariance(format!(
                "P0 must be positive definite, min eigenvalue {lo:e}"
            )));
        }
        if !m.t.is_finite() || !m.pos.is_finite() {
            return Err(Error::InvalidArgument("measurement must be finite".into()));
        }
        Ok(FilterState {
            x_hat: TargetState { pos: m.pos },
            p: p0,
            t: m.t,
            initialized: true,
        })
    }

    /// Propagates through the coordinated-turn model with input `u`.
    pub fn predict_step(&self, f: &FilterState, u: &InputVector, dt: f64) -> Result<FilterState> {
        self.predict_motion(f, &MotionInput::Turn(*u), dt)
    }

    pub fn predict_motion(
        &self,
        f: &FilterState,
        motion: &MotionInput,
        dt: f64,
    ) -> Result<FilterState> {
        if !f.initialized {
            return Err(Error::NotInitialized);
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let n = substep_count(dt, self.config.substep);
        let h = dt / n as f64;
        let q = self.noise.q;
        let mut x = f.x_hat;
        let mut p = f.p;
        for _ in 0..n {
            let a = motion.jacobian(&x)?;
            // Euler step of Ṗ = A·P + P·Aᵀ + Q written as a congruence, which
            // adds h²·A·P·Aᵀ and keeps P positive semi-definite. A is
            // nilpotent here, so I + h·A is the exact frozen-A transition.
            let phi = Mat2::IDENTITY + a.scale(h);
            p = (phi * p * phi.transpose() + q.scale(h)).symmetrized();
            x = rk4(motion, &x, h)?;
        }
        if !x.pos.is_finite() || !p.is_finite() {
            return Err(Error::NonFinite("predicted state"));
        }
        Ok(FilterState {
            x_hat: x,
            p,
            t: f.t + dt,
            initialized: true,
        })
    }

    /// Corrects with a measurement taken at the filter's current time.
    pub fn update_step(
        &self,
        f: &FilterState,
        m: &Measurement,
    ) -> Result<(FilterState, StepReport)> {
        if !f.initialized {
            return Err(Error::NotInitialized);
        }
        if !((m.t - f.t).abs() <= self.config.dt_tolerance) {
            return Err(Error::TimeMismatch {
                measurement_t: m.t,
                filter_t: f.t,
            });
        }
        let c = jacobian_c();
        let p = f.p;
        let s = self.noise.r + c * p * c.transpose();
        let s_inv = s.inverse().ok_or(Error::SingularInnovation)?;
        let gain = p * c.transpose() * s_inv;
        let innovation = m.pos - h_measure(&f.x_hat);
        let x = TargetState {
            pos: f.x_hat.pos + gain * innovation,
        };
        let i_lc = Mat2::IDENTITY - gain * c;
        let p_after = if self.config.joseph {
            i_lc * p * i_lc.transpose() + gain * self.noise.r * gain.transpose()
        } else {
            i_lc * p
        }
        .symmetrized();
        if !x.pos.is_finite() || !p_after.is_finite() {
            return Err(Error::NonFinite("corrected state"));
        }
        let next = FilterState {
            x_hat: x,
            p: p_after,
            t: f.t,
            initialized: true,
        };
        let report = StepReport {
            predicted: f.x_hat,
            prior_cov: p,
            corrected: Some(x),
            gain: Some(gain),
            innovation: Some(innovation),
            posterior_cov: Some(p_after),
            input: MotionInput::Stationary,
        };
        Ok((next, report))
    }

    /// One full cycle: propagate to the event time with the motion implied by
    /// `evolution_inputs`, then correct if the event carries a measurement.
    pub fn process_measurement(
        &self,
        f: &FilterState,
        event: &Event,
        evolution_inputs: Option<&CurvatureEstimate>,
    ) -> Result<(FilterState, StepReport)> {
        if !f.initialized {
            return Err(Error::NotInitialized);
        }
        let t = event.t();
        if !(t > f.t) {
            return Err(Error::NonMonotoneTime { t, last: f.t });
        }
        let motion = MotionInput::from_curvature(evolution_inputs)?;
        let mut predicted = self.predict_motion(f, &motion, t - f.t)?;
        predicted.t = t;
        match event {
            Event::Dropout(_) => {
                let report = StepReport {
                    predicted: predicted.x_hat,
                    prior_cov: predicted.p,
                    corrected: None,
                    gain: None,
                    innovation: None,
                    posterior_cov: None,
                    input: motion,
                };
                Ok((predicted, report))
            }
            Event::Measurement(m) => {
                let (next, mut report) = self.update_step(&predicted, m)?;
                report.input = motion;
                Ok((next, report))
            }
        }
    }
}

fn rk4(motion: &MotionInput, x: &TargetState, h: f64) -> Result<TargetState> {
    let at = |p: Vec2| TargetState { pos: p };
    let k1 = motion.velocity(x)?;
    let k2 = motion.velocity(&at(x.pos + k1.scale(0.5 * h)))?;
    let k3 = motion.velocity(&at(x.pos + k2.scale(0.5 * h)))?;
    let k4 = motion.velocity(&at(x.pos + k3.scale(h)))?;
    let step = (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0);
    Ok(at(x.pos + step))
}
