//! Per-track orchestration: curvature estimation feeding the filter, and
//! horizon prediction re-issued after every time step.

use serde::{Deserialize, Serialize};

use crate::ekf::{Ekf, EkfConfig, Event, FilterState, NoiseConfig, StepReport};
use crate::error::{Error, Result};
use crate::evolution::{
    build_increments, curvature_center, estimate_speed, ls_residual, solve_evolution, CenterMode,
    CurvatureEstimate, EvolutionMatrix, ObservationWindow, EPS_INC, MIN_WINDOW,
};
use crate::linalg::{Mat2, Vec2};
use crate::model::Measurement;
use crate::predictor::{predict_horizon, PredictedTrajectory, PredictionConfig};

/// Which positions populate a sliding window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowSource {
    /// Filter output (the predicted state on dropouts).
    #[default]
    Filtered,
    /// Raw measurements; dropouts leave a gap.
    Raw,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackerConfig {
    pub noise: NoiseConfig,
    pub ekf: EkfConfig,
    pub p0: Mat2,
    pub evolution_window: usize,
    pub center_mode: CenterMode,
    pub evolution_source: WindowSource,
    pub prediction: PredictionConfig,
    pub prediction_source: WindowSource,
}

impl TrackerConfig {
    /// Defaults around a measurement covariance `r`: `Q = 0.1·I`, `P0 = 4·R`.
    pub fn with_measurement_cov(r: Mat2) -> Result<Self> {
        Ok(TrackerConfig {
            noise: NoiseConfig::new(Mat2::scalar(0.1), r)?,
            ekf: EkfConfig::default(),
            p0: r.scale(4.0),
            evolution_window: crate::evolution::DEFAULT_WINDOW,
            center_mode: CenterMode::MidpointCorrected,
            evolution_source: WindowSource::Filtered,
            prediction: PredictionConfig::default(),
            prediction_source: WindowSource::Filtered,
        })
    }
}

/// Relative residual below which a partly filled window is trusted for a
/// turn estimate. Noisy short windows give wild turn angles; exact ones don't.
const TIGHT_FIT: f64 = 1e-6;

fn tight_fit(inc: &[Vec2], ev: &EvolutionMatrix) -> bool {
    let scale = inc.iter().map(|d| d.norm_sq()).sum::<f64>().sqrt();
    scale > 0.0 && ls_residual(inc, ev.c, ev.s) <= TIGHT_FIT * scale
}

/// Speed from the end-to-end chord of the window, corrected for the arc it
/// subtends at `delta` per sample. Unlike the mean chord speed this is not
/// inflated by per-sample jitter. `None` if the window spans half a turn or more.
fn net_speed(w: &ObservationWindow, delta: f64) -> Option<f64> {
    let (t0, p0) = *w.iter().next()?;
    let (t1, p1) = w.last()?;
    let half = 0.5 * delta.abs() * (w.len() - 1) as f64;
    if half >= std::f64::consts::FRAC_PI_2 || !(t1 > t0) {
        return None;
    }
    let sinc = if half < 1e-8 { 1.0 } else { half.sin() / half };
    Some((p1 - p0).norm() / (t1 - t0) / sinc)
}

/// Everything produced for one input sample.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackStep {
    pub t: f64,
    pub measurement: Option<Vec2>,
    /// `None` only before the first measurement arrives.
    pub filtered: Option<Vec2>,
    pub covariance: Option<Mat2>,
    pub curvature: Option<CurvatureEstimate>,
    pub report: Option<StepReport>,
    pub prediction: Option<PredictedTrajectory>,
}

pub struct Tracker {
    cfg: TrackerConfig,
    ekf: Ekf,
    state: FilterState,
    evolution: ObservationWindow,
    history: ObservationWindow,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        cfg.prediction.validate()?;
        Ok(Tracker {
            ekf: Ekf::new(cfg.noise, cfg.ekf)?,
            state: FilterState::uninitialized(),
            evolution: ObservationWindow::new(cfg.evolution_window)?,
            history: ObservationWindow::new(cfg.prediction.window_len)?,
            cfg,
        })
    }

    pub fn state(&self) -> &FilterState {
        &self.state
    }

    /// Motion estimate from the evolution window.
    ///
    /// A turn fit is used once the window is full, or earlier if the fit is
    /// tight; otherwise the target is assumed to move straight at the
    /// window's mean velocity. The speed is replaced by [`net_speed`] where
    /// it applies. `None` (a stationary target) only for single-sample
    /// windows.
    fn curvature(&self) -> Option<CurvatureEstimate> {
        if self.evolution.len() < 2 {
            return None;
        }
        let fit = build_increments(&self.evolution).and_then(|inc| {
            let ev = solve_evolution(&inc)?;
            Ok((inc, ev))
        });
        let ev = match fit {
            Ok((inc, ev)) if self.evolution.is_full() || tight_fit(&inc, &ev) => ev,
            _ => return Some(self.bootstrap_estimate()),
        };
        let mut est = curvature_center(&self.evolution, &ev, self.cfg.center_mode).ok()?;
        est.speed = net_speed(&self.evolution, ev.delta)
            .or_else(|| estimate_speed(&self.evolution).ok())?;
        Some(est)
    }

    /// Straight-line motion at the window's mean velocity, used while the
    /// window is too short for a turn estimate.
    fn bootstrap_estimate(&self) -> CurvatureEstimate {
        let (t0, p0) = self.evolution.iter().next().copied().unwrap_or_default();
        let (t1, p1) = self.evolution.last().unwrap_or_default();
        let chord = p1 - p0;
        let len = chord.norm();
        CurvatureEstimate {
            center: None,
            radius: None,
            speed: len / (t1 - t0),
            delta: 0.0,
            heading: if len > EPS_INC {
                chord.scale(1.0 / len)
            } else {
                Vec2::ZERO
            },
            straight_line: true,
        }
    }

    fn prediction(&self) -> Result<Option<PredictedTrajectory>> {
        if self.history.len() < self.cfg.prediction.window_len {
            return Ok(None);
        }
        match predict_horizon(&self.history, &self.cfg.prediction) {
            Ok(p) => Ok(Some(p)),
            // Gaps from raw-source dropouts and motionless windows just skip issuance.
            Err(Error::NonUniformSampling { .. } | Error::DegenerateIncrements) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn push(
        window: &mut ObservationWindow,
        source: WindowSource,
        t: f64,
        raw: Option<Vec2>,
        filtered: Vec2,
    ) -> Result<()> {
        match (source, raw) {
            (WindowSource::Filtered, _) => window.push(t, filtered),
            (WindowSource::Raw, Some(m)) => window.push(t, m),
            (WindowSource::Raw, None) => Ok(()),
        }
    }

    /// Advances the track by one sample; `measurement: None` is a dropout.
    pub fn step(&mut self, t: f64, measurement: Option<Vec2>) -> Result<TrackStep> {
        let mut out = TrackStep {
            t,
            measurement,
            filtered: None,
            covariance: None,
            curvature: None,
            report: None,
            prediction: None,
        };

        // Until the window can support a turn estimate there is no motion
        // input worth filtering with, so each measurement restarts the track.
        let acquiring = !self.state.initialized || self.evolution.len() < MIN_WINDOW;
        if acquiring && (measurement.is_some() || !self.state.initialized) {
            let Some(pos) = measurement else {
                return Ok(out);
            };
            self.state = self
                .ekf
                .init_from_measurement(&Measurement::new(t, pos), self.cfg.p0)?;
        } else {
            let curvature = self.curvature();
            let event = match measurement {
                Some(pos) => Event::Measurement(Measurement::new(t, pos)),
                None => Event::Dropout(t),
            };
            let (next, report) =
                self.ekf
                    .process_measurement(&self.state, &event, curvature.as_ref())?;
            self.state = next;
            out.curvature = curvature;
            out.report = Some(report);
        }

        let filtered = self.state.x_hat.pos;
        out.filtered = Some(filtered);
        out.covariance = Some(self.state.p);
        Self::push(
            &mut self.evolution,
            self.cfg.evolution_source,
            t,
            measurement,
            filtered,
        )?;
        Self::push(
            &mut self.history,
            self.cfg.prediction_source,
            t,
            measurement,
            filtered,
        )?;
        out.prediction = self.prediction()?;
        Ok(out)
    }

    /// Runs a whole track.
    pub fn run<I>(&mut self, samples: I) -> Result<Vec<TrackStep>>
    where
        I: IntoIterator<Item = (f64, Option<Vec2>)>,
    {
        samples.into_iter().map(|(t, m)| self.step(t, m)).collect()
    }
}
