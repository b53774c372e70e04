//! Deterministic ground-truth scenarios and measurement corruption.
//!
//! Noise comes from ChaCha20 (`rand_chacha`), keyed through
//! `SeedableRng::seed_from_u64`. Each sample consumes exactly three 64-bit
//! words in order: two uniforms for a Box–Muller pair (east, north noise) and
//! one uniform for the dropout decision. Uniforms are `(w >> 11)·2⁻⁵³`; the
//! Box–Muller radius uses `1 − u` so the logarithm never sees zero.

use std::f64::consts::TAU;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::linalg::Vec2;

/// Identifies the noise stream in output metadata.
pub const NOISE_ALGORITHM: &str = "chacha20(seed_from_u64)+box-muller, 3 words/sample";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Circle,
    /// Gerono lemniscate (figure eight).
    Lemniscate,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("bad scenario config: {0}")]
pub struct BadConfig(pub String);

/// Scenario description. For circles `radius` is the turn radius (m) and
/// `speed` the target speed (m/s); for lemniscates they are the half-width
/// `a` (m) and the parameter rate `ω` (rad/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenario")]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub center: Vec2,
    pub radius: f64,
    pub speed: f64,
    pub phase0: f64,
    pub t0: f64,
    pub dt: f64,
    pub steps: usize,
    pub noise_sigma: f64,
    pub dropout_prob: f64,
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    kind: ScenarioKind,
    #[serde(default)]
    center: Vec2,
    #[serde(alias = "halfwidth")]
    radius: Option<f64>,
    #[serde(alias = "param_rate")]
    speed: Option<f64>,
    #[serde(default)]
    phase0: f64,
    #[serde(default)]
    t0: f64,
    dt: Option<f64>,
    steps: Option<usize>,
    noise_sigma: Option<f64>,
    #[serde(default)]
    dropout_prob: f64,
    #[serde(default)]
    seed: u64,
}

impl TryFrom<RawScenario> for ScenarioConfig {
    type Error = BadConfig;

    fn try_from(raw: RawScenario) -> Result<Self, BadConfig> {
        let base = ScenarioConfig::defaults(raw.kind);
        let cfg = ScenarioConfig {
            kind: raw.kind,
            center: raw.center,
            radius: raw.radius.unwrap_or(base.radius),
            speed: raw.speed.unwrap_or(base.speed),
            phase0: raw.phase0,
            t0: raw.t0,
            dt: raw.dt.unwrap_or(base.dt),
            steps: raw.steps.unwrap_or(base.steps),
            noise_sigma: raw.noise_sigma.unwrap_or(base.noise_sigma),
            dropout_prob: raw.dropout_prob,
            seed: raw.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ScenarioConfig {
    /// Circle: r = 10 m, 5 m/s. Lemniscate: a = 10 m, ω = 0.25 rad/s.
    /// Both: dt = 0.1 s, 600 steps, σ = 0.5 m, no dropouts, seed 0.
    pub fn defaults(kind: ScenarioKind) -> Self {
        let (radius, speed) = match kind {
            ScenarioKind::Circle => (10.0, 5.0),
            ScenarioKind::Lemniscate => (10.0, 0.25),
        };
        ScenarioConfig {
            kind,
            center: Vec2::ZERO,
            radius,
            speed,
            phase0: 0.0,
            t0: 0.0,
            dt: 0.1,
            steps: 600,
            noise_sigma: 0.5,
            dropout_prob: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), BadConfig> {
        let finite = [
            self.radius,
            self.speed,
            self.phase0,
            self.t0,
            self.dt,
            self.noise_sigma,
            self.dropout_prob,
        ]
        .iter()
        .all(|x| x.is_finite())
            && self.center.is_finite();
        if !finite {
            return Err(BadConfig("all scenario values must be finite".into()));
        }
        if !(self.dt > 0.0) {
            return Err(BadConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.steps < 1 {
            return Err(BadConfig("steps must be >= 1".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(BadConfig(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        if !(0.0..=1.0).contains(&self.dropout_prob) {
            return Err(BadConfig(format!(
                "dropout_prob must be in [0, 1], got {}",
                self.dropout_prob
            )));
        }
        if !(self.radius > 0.0) {
            return Err(BadConfig(format!(
                "radius/halfwidth must be > 0, got {}",
                self.radius
            )));
        }
        match self.kind {
            ScenarioKind::Circle if self.speed < 0.0 => {
                Err(BadConfig(format!("speed must be >= 0, got {}", self.speed)))
            }
            ScenarioKind::Lemniscate if !(self.speed > 0.0) => Err(BadConfig(format!(
                "param_rate must be > 0, got {}",
                self.speed
            ))),
            _ => Ok(()),
        }
    }

    fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }
}

/// One time step of a track. `measurement: None` means the fix was dropped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub t: f64,
    pub truth: Option<Vec2>,
    pub measurement: Option<Vec2>,
}

/// Ground truth on a circle; measurements are left empty.
pub fn gen_circle(cfg: &ScenarioConfig) -> Result<Vec<TrackSample>, BadConfig> {
    if cfg.kind != ScenarioKind::Circle {
        return Err(BadConfig("gen_circle needs kind = circle".into()));
    }
    cfg.validate()?;
    let rate = cfg.speed / cfg.radius;
    Ok((0..cfg.steps)
        .map(|k| {
            let theta = cfg.phase0 + rate * (k as f64 * cfg.dt);
            TrackSample {
                t: cfg.time(k),
                truth: Some(cfg.center + Vec2::from_angle(theta).scale(cfg.radius)),
                measurement: None,
            }
        })
        .collect())
}

/// Ground truth on the Gerono lemniscate `(a·cos u, (a/2)·sin 2u)`.
pub fn gen_lemniscate(cfg: &ScenarioConfig) -> Result<Vec<TrackSample>, BadConfig> {
    if cfg.kind != ScenarioKind::Lemniscate {
        return Err(BadConfig("gen_lemniscate needs kind = lemniscate".into()));
    }
    cfg.validate()?;
    let a = cfg.radius;
    Ok((0..cfg.steps)
        .map(|k| {
            let u = cfg.phase0 + cfg.speed * (k as f64 * cfg.dt);
            TrackSample {
                t: cfg.time(k),
                truth: Some(cfg.center + Vec2::new(a * u.cos(), 0.5 * a * (2.0 * u).sin())),
                measurement: None,
            }
        })
        .collect())
}

pub fn generate(cfg: &ScenarioConfig) -> Result<Vec<TrackSample>, BadConfig> {
    match cfg.kind {
        ScenarioKind::Circle => gen_circle(cfg),
        ScenarioKind::Lemniscate => gen_lemniscate(cfg),
    }
}

fn unit_uniform(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Fills measurements with truth plus seeded Gaussian noise and drops each
/// sample independently with probability `dropout_prob`.
///
/// Samples without truth are passed through unchanged (no words consumed).
pub fn corrupt(truth_track: &[TrackSample], cfg: &ScenarioConfig) -> Vec<TrackSample> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    truth_track
        .iter()
        .map(|s| {
            let Some(truth) = s.truth else {
                return *s;
            };
            let u1 = 1.0 - unit_uniform(&mut rng);
            let u2 = unit_uniform(&mut rng);
            let dropped = unit_uniform(&mut rng) < cfg.dropout_prob;
            let radius = (-2.0 * u1.ln()).sqrt();
            let (sin, cos) = (TAU * u2).sin_cos();
            let noise = Vec2::new(radius * cos, radius * sin).scale(cfg.noise_sigma);
            TrackSample {
                measurement: (!dropped).then_some(truth + noise),
                ..*s
            }
        })
        .collect()
}

/// Truth generation followed by corruption.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Vec<TrackSample>, BadConfig> {
    Ok(corrupt(&generate(cfg)?, cfg))
}
