//! Horizon prediction from a window of recent positions.
//!
//! The window's increments give a per-sample turn `δ`; the last increment is
//! then rotated by `δ` once per future step and accumulated onto the last
//! position. On a uniformly sampled circle this recurrence is exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{
    build_increments, estimate_speed, solve_evolution, ObservationWindow, DEFAULT_WINDOW, EPS_INC,
    MIN_WINDOW,
};
use crate::linalg::Vec2;

/// Largest tolerated relative deviation of a sampling interval from the mean.
pub const MAX_JITTER: f64 = 0.01;
pub const DEFAULT_HORIZON: usize = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagationMode {
    /// Rotate the last chord increment by `δ` each step.
    #[default]
    IncrementRotation,
    /// Step `V·Δt·(−sin θ, cos θ)` with `θ` advanced by `δ` each step.
    ArcLength,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictionConfig {
    pub window_len: usize,
    pub horizon_steps: usize,
    /// Prediction step (s); `None` uses the window's sampling interval.
    pub step_dt: Option<f64>,
    pub mode: PropagationMode,
}

impl Default for PredictionConfig {
    fn default() -> Self {
        PredictionConfig {
            window_len: DEFAULT_WINDOW,
            horizon_steps: DEFAULT_HORIZON,
            step_dt: None,
            mode: PropagationMode::IncrementRotation,
        }
    }
}

impl PredictionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len < MIN_WINDOW {
            return Err(Error::InvalidArgument(format!(
                "window_len must be >= {MIN_WINDOW}"
            )));
        }
        if self.horizon_steps < 1 {
            return Err(Error::InvalidArgument("horizon_steps must be >= 1".into()));
        }
        if let Some(dt) = self.step_dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "step_dt must be > 0, got {dt}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictedTrajectory {
    /// Time of the last observation the prediction was issued from.
    pub start_t: f64,
    pub points: Vec<(f64, Vec2)>,
}

/// Heading angle of the last increment in the `(−sin θ, cos θ)` convention,
/// i.e. `θ = atan2(−Δe, Δn)`. On a circle this is the angular position of
/// the chord midpoint.
pub fn heading_seed(w: &ObservationWindow) -> Result<f64> {
    let inc = build_increments(w)?;
    let last = *inc.last().expect("at least one increment");
    if last.norm() <= EPS_INC {
        return Err(Error::DegenerateIncrements);
    }
    Ok((-last.e).atan2(last.n))
}

pub fn predict_horizon(
    w: &ObservationWindow,
    cfg: &PredictionConfig,
) -> Result<PredictedTrajectory> {
    cfg.validate()?;
    let needed = cfg.window_len.max(MIN_WINDOW);
    if w.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: w.len(),
        });
    }
    let w = w.tail(cfg.window_len)?;
    let (dt_obs, jitter) = w.sampling_interval()?;
    if jitter > MAX_JITTER {
        return Err(Error::NonUniformSampling { jitter });
    }

    let increments = build_increments(&w)?;
    let ev = solve_evolution(&increments)?;
    let step_dt = cfg.step_dt.unwrap_or(dt_obs);
    let ratio = step_dt / dt_obs;
    let same_rate = (ratio - 1.0).abs() <= 1e-9;
    let straight = ev.is_straight();

    let (start_t, mut pos) = w.last().expect("window is non-empty");
    let mut points = Vec::with_capacity(cfg.horizon_steps);

    match cfg.mode {
        PropagationMode::IncrementRotation => {
            let mut inc = *increments.last().expect("at least two increments");
            if inc.norm() <= EPS_INC {
                return Err(Error::DegenerateIncrements);
            }
            let (c, s) = if same_rate || straight {
                (ev.c, ev.s)
            } else {
                let (s, c) = (ev.delta * ratio).sin_cos();
                (c, s)
            };
            if !same_rate {
                // Resize the chord for the new step, and pre-rotate so the first
                // rotation by `δ·ratio` lands on the first predicted chord, whose
                // midpoint is `δ·(1 + ratio)/2` ahead of the last observed one.
                if straight {
                    inc = inc.scale(ratio);
                } else {
                    let scale = (0.5 * ev.delta * ratio).sin() / (0.5 * ev.delta).sin();
                    inc = inc.scale(scale).rotate(0.5 * ev.delta * (1.0 - ratio));
                }
            }
            for i in 1..=cfg.horizon_steps {
                if !straight {
                    inc = inc.rotate_cs(c, s);
                }
                pos += inc;
                points.push((start_t + i as f64 * step_dt, pos));
            }
        }
        PropagationMode::ArcLength => {
            let speed = estimate_speed(&w)?;
            let mut theta = heading_seed(&w)?;
            let turn = if straight { 0.0 } else { ev.delta * ratio };
            for i in 1..=cfg.horizon_steps {
                theta += turn;
                pos += Vec2::new(-theta.sin(), theta.cos()).scale(speed * step_dt);
                points.push((start_t + i as f64 * step_dt, pos));
            }
        }
    }

    if points.iter().any(|(_, p)| !p.is_finite()) {
        return Err(Error::NonFinite("predicted trajectory"));
    }
    Ok(PredictedTrajectory { start_t, points })
}
