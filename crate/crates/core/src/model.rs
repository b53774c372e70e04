//! State, input and measurement types plus the continuous-time
//! coordinated-turn process model and the identity measurement model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};

/// Below this target-to-center distance (m) the turn model is undefined.
pub const EPS_RADIUS: f64 = 1e-6;

/// Planar position estimate in the inertial east-north frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub pos: Vec2,
}

impl TargetState {
    pub const fn new(e: f64, n: f64) -> Self {
        TargetState {
            pos: Vec2::new(e, n),
        }
    }
}

impl From<Vec2> for TargetState {
    fn from(pos: Vec2) -> Self {
        TargetState { pos }
    }
}

/// Sense of rotation about the curvature center.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnDirection {
    #[default]
    CounterClockwise,
    Clockwise,
}

impl TurnDirection {
    /// Direction matching the sign of a turn angle; zero counts as counter-clockwise.
    pub fn from_angle(delta: f64) -> Self {
        if delta < 0.0 {
            TurnDirection::Clockwise
        } else {
            TurnDirection::CounterClockwise
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            TurnDirection::CounterClockwise => 1.0,
            TurnDirection::Clockwise => -1.0,
        }
    }
}

/// Target speed and instantaneous curvature center driving the process model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputVector {
    /// m/s, non-negative.
    pub speed: f64,
    pub center: Vec2,
    #[serde(default)]
    pub turn: TurnDirection,
}

impl InputVector {
    pub fn new(speed: f64, center: Vec2) -> Result<Self> {
        Self::with_turn(speed, center, TurnDirection::CounterClockwise)
    }

    pub fn with_turn(speed: f64, center: Vec2, turn: TurnDirection) -> Result<Self> {
        if !(speed >= 0.0 && speed.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "speed must be finite and >= 0, got {speed}"
            )));
        }
        if !center.is_finite() {
            return Err(Error::InvalidArgument(
                "curvature center must be finite".into(),
            ));
        }
        Ok(InputVector {
            speed,
            center,
            turn,
        })
    }
}

/// A timestamped position fix already mapped into the inertial plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub t: f64,
    pub pos: Vec2,
}

impl Measurement {
    pub const fn new(t: f64, pos: Vec2) -> Self {
        Measurement { t, pos }
    }
}

fn offset_from_center(x: &TargetState, u: &InputVector) -> Result<(Vec2, f64)> {
    let d = x.pos - u.center;
    let rho = d.norm();
    if !(rho > EPS_RADIUS) {
        return Err(Error::DegenerateRadius { rho });
    }
    Ok((d, rho))
}

/// Velocity of a target circling `u.center` at `u.speed`.
///
/// For a counter-clockwise turn this is `V·(-(p_n - p_n0), p_e - p_e0) / ρ`;
/// a clockwise turn flips the sign. The result is tangent to the circle
/// through `x` and has magnitude `u.speed`.
pub fn f_dynamics(x: &TargetState, u: &InputVector) -> Result<Vec2> {
    let (d, rho) = offset_from_center(x, u)?;
    let k = u.turn.sign() * u.speed / rho;
    Ok(Vec2::new(-k * d.n, k * d.e))
}

/// Analytic Jacobian `∂f_dynamics/∂x`:
/// `(V/ρ³)·[[dn·de, −de²], [dn², −de·dn]]`, sign-flipped for clockwise turns.
pub fn jacobian_a(x: &TargetState, u: &InputVector) -> Result<Mat2> {
    let (d, rho) = offset_from_center(x, u)?;
    let k = u.turn.sign() * u.speed / (rho * rho * rho);
    let (de, dn) = (d.e, d.n);
    Ok(Mat2::new(dn * de, -de * de, dn * dn, -de * dn).scale(k))
}

/// The measurement model: position is observed directly.
pub fn h_measure(x: &TargetState) -> Vec2 {
    x.pos
}

/// Jacobian of [`h_measure`], the 2×2 identity.
pub fn jacobian_c() -> Mat2 {
    Mat2::IDENTITY
}
