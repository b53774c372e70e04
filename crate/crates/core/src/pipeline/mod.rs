//! End-to-end runs: load or simulate samples, track them, score the result,
//! and write plot-ready CSV files.

mod config;
mod csv_io;
mod metrics;

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

pub use config::{
    EvolutionSettings, FilterSettings, PredictionSettings, RunConfig, Source, DEFAULT_REPLAY_SIGMA,
    MIN_MEASUREMENT_VAR,
};
pub use csv_io::{
    ingest_measurements, read_predictions_csv, read_track_csv, write_predictions_csv,
    write_track_csv, TrackRow, PREDICTION_HEADER, TRACK_HEADER,
};
pub use metrics::{
    prediction_error_profile, rmse, sig6, HorizonError, MetricsError, MetricsReport,
};

use crate::ekf::DT_TOLERANCE;
use crate::error::Error;
use crate::linalg::Vec2;
use crate::predictor::PredictedTrajectory;
use crate::simulator::{self, TrackSample, NOISE_ALGORITHM};
use crate::tracker::{TrackStep, Tracker, TrackerConfig};

pub const TRACK_FILE: &str = "track.csv";
pub const PREDICTION_FILE: &str = "predictions.csv";
pub const METRICS_FILE: &str = "metrics.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}{}: {msg}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        line: Option<u64>,
        msg: String,
    },
    #[error("{}:{line}: timestamp {t} is not after the previous row", path.display())]
    NonMonotoneTime { path: PathBuf, line: u64, t: f64 },
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] Error),
}

impl PipelineError {
    /// Process exit code: 2 config, 3 I/O or parse, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Io { .. }
            | PipelineError::Parse { .. }
            | PipelineError::NonMonotoneTime { .. }
            | PipelineError::Metrics(_) => 3,
            PipelineError::Numerical(_) => 4,
        }
    }
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub rows: Vec<TrackRow>,
    pub steps: Vec<TrackStep>,
    pub predictions: Vec<PredictedTrajectory>,
    pub metrics: MetricsReport,
}

/// Loads or simulates the configured samples.
pub fn load_samples(cfg: &RunConfig) -> Result<Vec<TrackSample>, PipelineError> {
    match cfg.source()? {
        Source::Scenario(s) => {
            simulator::simulate(&s).map_err(|e| PipelineError::Config(e.to_string()))
        }
        Source::File(path) => ingest_measurements(&path),
    }
}

/// Feeds samples through the tracker and scores the result.
pub fn run_samples(
    samples: &[TrackSample],
    tracker_cfg: TrackerConfig,
) -> Result<RunArtifacts, PipelineError> {
    let mut tracker = Tracker::new(tracker_cfg)?;
    let steps = tracker.run(samples.iter().map(|s| (s.t, s.measurement)))?;
    let rows: Vec<TrackRow> = samples
        .iter()
        .zip(&steps)
        .map(|(s, st)| TrackRow {
            t: s.t,
            truth: s.truth,
            measurement: s.measurement,
            filtered: st.filtered,
        })
        .collect();
    let predictions: Vec<PredictedTrajectory> =
        steps.iter().filter_map(|s| s.prediction.clone()).collect();
    let metrics = compute_metrics(&rows, &predictions)?;
    Ok(RunArtifacts {
        rows,
        steps,
        predictions,
        metrics,
    })
}

/// Generates or loads samples per `cfg`, then tracks and scores them.
pub fn run_scenario(cfg: &RunConfig) -> Result<RunArtifacts, PipelineError> {
    let tracker_cfg = cfg.tracker_config()?;
    let samples = load_samples(cfg)?;
    run_samples(&samples, tracker_cfg)
}

/// Metrics over a finished track.
pub fn compute_metrics(
    rows: &[TrackRow],
    predictions: &[PredictedTrajectory],
) -> Result<MetricsReport, PipelineError> {
    let (mut truth, mut meas, mut filt) = (Vec::new(), Vec::new(), Vec::new());
    for r in rows {
        if let (Some(t), Some(m), Some(f)) = (r.truth, r.measurement, r.filtered) {
            truth.push(t);
            meas.push(m);
            filt.push(f);
        }
    }
    let (rmse_raw, rmse_filtered) = if truth.is_empty() {
        (None, None)
    } else {
        (Some(rmse(&meas, &truth)?), Some(rmse(&filt, &truth)?))
    };
    let truth_series: Vec<(f64, Vec2)> =
        rows.iter().filter_map(|r| Some((r.t, r.truth?))).collect();
    let profile = prediction_error_profile(predictions, &truth_series, DT_TOLERANCE)?;
    Ok(MetricsReport {
        samples: rows.len(),
        dropout_count: rows.iter().filter(|r| r.measurement.is_none()).count(),
        rmse_raw,
        rmse_filtered,
        prediction_error_by_horizon: profile,
    })
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    #[serde(flatten)]
    metrics: &'a MetricsReport,
    seed: Option<u64>,
    noise_algorithm: Option<&'static str>,
}

fn ensure_dir(dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn write_track(dir: &Path, run: &RunArtifacts) -> Result<PathBuf, PipelineError> {
    ensure_dir(dir)?;
    let path = dir.join(TRACK_FILE);
    write_track_csv(&path, &run.rows)?;
    Ok(path)
}

pub fn write_predictions(dir: &Path, run: &RunArtifacts) -> Result<PathBuf, PipelineError> {
    ensure_dir(dir)?;
    let path = dir.join(PREDICTION_FILE);
    write_predictions_csv(&path, &run.predictions)?;
    Ok(path)
}

/// Writes `metrics.json`; simulated runs also record the seed and noise generator.
pub fn write_metrics(
    dir: &Path,
    metrics: &MetricsReport,
    cfg: &RunConfig,
) -> Result<PathBuf, PipelineError> {
    ensure_dir(dir)?;
    let path = dir.join(METRICS_FILE);
    let scenario = match cfg.source()? {
        Source::Scenario(s) => Some(s),
        Source::File(_) => None,
    };
    let doc = MetricsFile {
        metrics,
        seed: scenario.map(|s| s.seed),
        noise_algorithm: scenario.map(|_| NOISE_ALGORITHM),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("metrics serialize");
    text.push('\n');
    std::fs::write(&path, text).map_err(|source| PipelineError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes track, prediction and metrics files into `dir`.
pub fn write_all(
    dir: &Path,
    run: &RunArtifacts,
    cfg: &RunConfig,
) -> Result<Vec<PathBuf>, PipelineError> {
    Ok(vec![
        write_track(dir, run)?,
        write_predictions(dir, run)?,
        write_metrics(dir, &run.metrics, cfg)?,
    ])
}

/// Recomputes metrics from previously written files.
pub fn report_from_files(
    track: &Path,
    predictions: Option<&Path>,
) -> Result<MetricsReport, PipelineError> {
    let rows = read_track_csv(track)?;
    let preds = match predictions {
        Some(p) => read_predictions_csv(p)?,
        None => Vec::new(),
    };
    compute_metrics(&rows, &preds)
}
