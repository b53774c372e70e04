//! JSON run configuration. Every field has a default, so
//! `{"scenario":{"kind":"circle"}}` (or even `{}`) is a complete config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::ekf::{EkfConfig, NoiseConfig, DEFAULT_SUBSTEP, DT_TOLERANCE};
use crate::evolution::{CenterMode, DEFAULT_WINDOW};
use crate::linalg::Mat2;
use crate::predictor::{PredictionConfig, PropagationMode, DEFAULT_HORIZON};
use crate::simulator::{ScenarioConfig, ScenarioKind};
use crate::tracker::{TrackerConfig, WindowSource};

/// Smallest measurement variance (m²) used when R is derived from a noise level.
pub const MIN_MEASUREMENT_VAR: f64 = 1e-12;
/// Noise level assumed for replayed files when nothing else is known.
pub const DEFAULT_REPLAY_SIGMA: f64 = 0.5;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Synthetic scenario; defaults to the standard circle when `input` is unset.
    pub scenario: Option<ScenarioConfig>,
    /// Measurement file to replay instead of simulating.
    pub input: Option<PathBuf>,
    pub filter: FilterSettings,
    pub evolution: EvolutionSettings,
    pub prediction: PredictionSettings,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSettings {
    pub q: Mat2,
    /// Explicit measurement covariance; otherwise `r_amplification·σ²·I`.
    pub r: Option<Mat2>,
    pub r_amplification: f64,
    /// Noise level for replayed files (scenarios use their own `noise_sigma`).
    pub measurement_sigma: Option<f64>,
    /// Explicit initial covariance; otherwise `p0_scale·R`.
    pub p0: Option<Mat2>,
    pub p0_scale: f64,
    pub joseph: bool,
    pub substep: f64,
    pub dt_tolerance: f64,
}

impl Default for FilterSettings {
    fn default() -> Self {
        FilterSettings {
            q: Mat2::scalar(0.1),
            r: None,
            r_amplification: 4.0,
            measurement_sigma: None,
            p0: None,
            p0_scale: 4.0,
            joseph: false,
            substep: DEFAULT_SUBSTEP,
            dt_tolerance: DT_TOLERANCE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSettings {
    pub window: usize,
    pub center_mode: CenterMode,
    pub source: WindowSource,
}

impl Default for EvolutionSettings {
    fn default() -> Self {
        EvolutionSettings {
            window: DEFAULT_WINDOW,
            center_mode: CenterMode::MidpointCorrected,
            source: WindowSource::Filtered,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictionSettings {
    pub window_len: usize,
    pub horizon_steps: usize,
    pub step_dt: Option<f64>,
    pub mode: PropagationMode,
    pub source: WindowSource,
}

impl Default for PredictionSettings {
    fn default() -> Self {
        PredictionSettings {
            window_len: DEFAULT_WINDOW,
            horizon_steps: DEFAULT_HORIZON,
            step_dt: None,
            mode: PropagationMode::IncrementRotation,
            source: WindowSource::Filtered,
        }
    }
}

/// Where samples come from.
#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Scenario(ScenarioConfig),
    File(PathBuf),
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            PipelineError::Config(msg) => {
                PipelineError::Config(format!("{}: {msg}", path.display()))
            }
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.source()?;
        Ok(cfg)
    }

    pub fn source(&self) -> Result<Source, PipelineError> {
        match (&self.scenario, &self.input) {
            (Some(_), Some(_)) => Err(PipelineError::Config(
                "set either scenario or input, not both".into(),
            )),
            (Some(s), None) => Ok(Source::Scenario(*s)),
            (None, Some(p)) => Ok(Source::File(p.clone())),
            (None, None) => Ok(Source::Scenario(ScenarioConfig::defaults(
                ScenarioKind::Circle,
            ))),
        }
    }

    /// Overrides the scenario seed (simulations only).
    pub fn set_seed(&mut self, seed: u64) {
        let mut s = self
            .scenario
            .unwrap_or_else(|| ScenarioConfig::defaults(ScenarioKind::Circle));
        s.seed = seed;
        if self.input.is_none() {
            self.scenario = Some(s);
        }
    }

    fn measurement_sigma(&self) -> f64 {
        match self.source() {
            Ok(Source::Scenario(s)) => s.noise_sigma,
            _ => self
                .filter
                .measurement_sigma
                .unwrap_or(DEFAULT_REPLAY_SIGMA),
        }
    }

    pub fn tracker_config(&self) -> Result<TrackerConfig, PipelineError> {
        let f = &self.filter;
        let bad = |msg: String| PipelineError::Config(msg);
        if !(f.r_amplification > 0.0) || !(f.p0_scale > 0.0) {
            return Err(bad(
                "filter.r_amplification and filter.p0_scale must be > 0".into(),
            ));
        }
        let r = match f.r {
            Some(r) => r,
            None => {
                let sigma = self.measurement_sigma();
                Mat2::scalar((f.r_amplification * sigma * sigma).max(MIN_MEASUREMENT_VAR))
            }
        };
        let noise = NoiseConfig::new(f.q, r).map_err(|e| bad(format!("filter noise: {e}")))?;
        let ekf = EkfConfig {
            substep: f.substep,
            joseph: f.joseph,
            dt_tolerance: f.dt_tolerance,
        };
        if !(ekf.substep > 0.0) || !(ekf.dt_tolerance >= 0.0) {
            return Err(bad(
                "filter.substep must be > 0 and filter.dt_tolerance >= 0".into(),
            ));
        }
        let prediction = PredictionConfig {
            window_len: self.prediction.window_len,
            horizon_steps: self.prediction.horizon_steps,
            step_dt: self.prediction.step_dt,
            mode: self.prediction.mode,
        };
        prediction
            .validate()
            .map_err(|e| bad(format!("prediction: {e}")))?;
        if self.evolution.window < crate::evolution::MIN_WINDOW {
            return Err(bad(format!(
                "evolution.window must be >= {}",
                crate::evolution::MIN_WINDOW
            )));
        }
        Ok(TrackerConfig {
            noise,
            ekf,
            p0: f.p0.unwrap_or_else(|| r.scale(f.p0_scale)),
            evolution_window: self.evolution.window,
            center_mode: self.evolution.center_mode,
            evolution_source: self.evolution.source,
            prediction,
            prediction_source: self.prediction.source,
        })
    }
}
