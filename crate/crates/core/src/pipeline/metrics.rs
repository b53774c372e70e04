use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Vec2;
use crate::predictor::PredictedTrajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("cannot compute a metric over an empty series")]
    Empty,
    #[error("prediction time {t} has no truth sample within {tolerance} s")]
    Alignment { t: f64, tolerance: f64 },
}

/// Root of the mean squared Euclidean distance between paired points.
pub fn rmse(a: &[Vec2], b: &[Vec2]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(MetricsError::Empty);
    }
    let sum: f64 = a.iter().zip(b).map(|(p, q)| (*p - *q).norm_sq()).sum();
    Ok((sum / a.len() as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonError {
    pub steps: usize,
    pub mean_error: f64,
    pub max_error: f64,
    /// Number of predictions that reached this horizon inside the truth span.
    pub count: usize,
}

/// Error of every issued prediction against truth, aggregated per horizon step.
///
/// `truth` must be sorted by time. Predicted points past the end of the truth
/// record are skipped; any other point without a truth sample within
/// `tolerance` is an alignment error.
pub fn prediction_error_profile(
    predictions: &[PredictedTrajectory],
    truth: &[(f64, Vec2)],
    tolerance: f64,
) -> Result<Vec<HorizonError>, MetricsError> {
    let Some(&(t_end, _)) = truth.last() else {
        return Ok(Vec::new());
    };
    let horizon = predictions
        .iter()
        .map(|p| p.points.len())
        .max()
        .unwrap_or(0);
    let mut sums = vec![(0.0_f64, 0.0_f64, 0_usize); horizon];
    for pred in predictions {
        for (h, &(t, pos)) in pred.points.iter().enumerate() {
            if t > t_end + tolerance {
                break;
            }
            let actual =
                lookup(truth, t, tolerance).ok_or(MetricsError::Alignment { t, tolerance })?;
            let err = pos.distance(actual);
            let slot = &mut sums[h];
            slot.0 += err;
            slot.1 = slot.1.max(err);
            slot.2 += 1;
        }
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .filter(|(_, (_, _, n))| *n > 0)
        .map(|(h, (sum, max, n))| HorizonError {
            steps: h + 1,
            mean_error: sum / n as f64,
            max_error: max,
            count: n,
        })
        .collect())
}

fn lookup(truth: &[(f64, Vec2)], t: f64, tolerance: f64) -> Option<Vec2> {
    let i = truth.partition_point(|(ts, _)| *ts < t);
    [i.checked_sub(1), Some(i)]
        .into_iter()
        .flatten()
        .filter_map(|j| truth.get(j))
        .filter(|(ts, _)| (ts - t).abs() <= tolerance)
        .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
        .map(|&(_, p)| p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub samples: usize,
    pub dropout_count: usize,
    /// Measurement error over non-dropped samples with truth.
    pub rmse_raw: Option<f64>,
    /// Filter error over the same samples as `rmse_raw`.
    pub rmse_filtered: Option<f64>,
    pub prediction_error_by_horizon: Vec<HorizonError>,
}

impl MetricsReport {
    pub fn horizon(&self, steps: usize) -> Option<&HorizonError> {
        self.prediction_error_by_horizon
            .iter()
            .find(|h| h.steps == steps)
    }
}

/// Formats `x` with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map(sig6).unwrap_or_else(|| "n/a".into());
        writeln!(f, "samples        {}", self.samples)?;
        writeln!(f, "dropouts       {}", self.dropout_count)?;
        writeln!(f, "rmse_raw       {}", opt(self.rmse_raw))?;
        writeln!(f, "rmse_filtered  {}", opt(self.rmse_filtered))?;
        if !self.prediction_error_by_horizon.is_empty() {
            writeln!(f, "horizon  mean_error  max_error  count")?;
            for h in &self.prediction_error_by_horizon {
                writeln!(
                    f,
                    "{:>7}  {:>10}  {:>9}  {:>5}",
                    h.steps,
                    sig6(h.mean_error),
                    sig6(h.max_error),
                    h.count
                )?;
            }
        }
        Ok(())
    }
}
