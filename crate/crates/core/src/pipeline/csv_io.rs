//! Track and prediction CSV files.
//!
//! Track file header: `t,truth_e,truth_n,meas_e,meas_n,filt_e,filt_n,dropped`.
//! Unknown values are empty fields; a dropped measurement has empty
//! `meas_*` fields and `dropped=1`.
//!
//! Prediction file header: `issued_t,horizon_step,pred_t,pred_e,pred_n`.
//!
//! Floats are written in Rust's shortest round-trip decimal form, so parsing
//! a written file gives back bit-identical values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};

use super::PipelineError;
use crate::linalg::Vec2;
use crate::predictor::PredictedTrajectory;
use crate::simulator::TrackSample;

pub const TRACK_HEADER: [&str; 8] = [
    "t", "truth_e", "truth_n", "meas_e", "meas_n", "filt_e", "filt_n", "dropped",
];
pub const PREDICTION_HEADER: [&str; 5] = ["issued_t", "horizon_step", "pred_t", "pred_e", "pred_n"];

/// One line of a track file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackRow {
    pub t: f64,
    pub truth: Option<Vec2>,
    pub measurement: Option<Vec2>,
    pub filtered: Option<Vec2>,
}

impl TrackRow {
    pub fn sample(&self) -> TrackSample {
        TrackSample {
            t: self.t,
            truth: self.truth,
            measurement: self.measurement,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn pair(v: Option<Vec2>) -> [String; 2] {
    match v {
        Some(p) => [p.e.to_string(), p.n.to_string()],
        None => [String::new(), String::new()],
    }
}

pub fn write_track_csv(path: &Path, rows: &[TrackRow]) -> Result<(), PipelineError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "{}", TRACK_HEADER.join(","))?;
        for r in rows {
            let [te, tn] = pair(r.truth);
            let [me, mn] = pair(r.measurement);
            let [fe, fn_] = pair(r.filtered);
            let dropped = u8::from(r.measurement.is_none());
            writeln!(out, "{},{te},{tn},{me},{mn},{fe},{fn_},{dropped}", r.t)?;
        }
        out.flush()
    };
    write().map_err(io_err(path))
}

pub fn write_predictions_csv(
    path: &Path,
    predictions: &[PredictedTrajectory],
) -> Result<(), PipelineError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "{}", PREDICTION_HEADER.join(","))?;
        for p in predictions {
            for (h, (t, pos)) in p.points.iter().enumerate() {
                writeln!(out, "{},{},{},{},{}", p.start_t, h + 1, t, pos.e, pos.n)?;
            }
        }
        out.flush()
    };
    write().map_err(io_err(path))
}

/// Column indices resolved from a header row.
struct Columns {
    idx: Vec<Option<usize>>,
}

impl Columns {
    fn new(header: &StringRecord, names: &[&str]) -> Self {
        Columns {
            idx: names
                .iter()
                .map(|n| header.iter().position(|h| h == *n))
                .collect(),
        }
    }

    fn get<'r>(&self, rec: &'r StringRecord, which: usize) -> Option<&'r str> {
        self.idx[which]
            .and_then(|i| rec.get(i))
            .filter(|s| !s.is_empty())
    }
}

struct RowParser<'a> {
    path: &'a Path,
    line: u64,
}

impl RowParser<'_> {
    fn err(&self, msg: impl Into<String>) -> PipelineError {
        PipelineError::Parse {
            path: self.path.to_path_buf(),
            line: Some(self.line),
            msg: msg.into(),
        }
    }

    fn number(&self, field: &str, s: &str) -> Result<f64, PipelineError> {
        let v: f64 = s
            .parse()
            .map_err(|_| self.err(format!("{field}: cannot parse {s:?} as a number")))?;
        if !v.is_finite() {
            return Err(self.err(format!("{field}: value {s:?} is not finite")));
        }
        Ok(v)
    }

    fn point(
        &self,
        names: [&str; 2],
        e: Option<&str>,
        n: Option<&str>,
    ) -> Result<Option<Vec2>, PipelineError> {
        match (e, n) {
            (None, None) => Ok(None),
            (Some(e), Some(n)) => Ok(Some(Vec2::new(
                self.number(names[0], e)?,
                self.number(names[1], n)?,
            ))),
            _ => Err(self.err(format!(
                "{} and {} must both be present or both empty",
                names[0], names[1]
            ))),
        }
    }
}

fn open(path: &Path) -> Result<(csv::Reader<File>, StringRecord), PipelineError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = ReaderBuilder::new()
        .trim(Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    Ok((reader, header))
}

fn csv_err(path: &Path, e: csv::Error) -> PipelineError {
    let line = e.position().map(|p| p.line());
    PipelineError::Parse {
        path: path.to_path_buf(),
        line,
        msg: e.to_string(),
    }
}

/// Reads a track file. Only `t`, `meas_e` and `meas_n` are required; truth,
/// filtered and `dropped` columns are optional.
pub fn read_track_csv(path: &Path) -> Result<Vec<TrackRow>, PipelineError> {
    let (mut reader, header) = open(path)?;
    let cols = Columns::new(&header, &TRACK_HEADER);
    for (i, name) in [(0, "t"), (3, "meas_e"), (4, "meas_n")] {
        if cols.idx[i].is_none() {
            return Err(PipelineError::Parse {
                path: path.to_path_buf(),
                line: Some(1),
                msg: format!("missing required column {name:?}"),
            });
        }
    }

    let mut rows: Vec<TrackRow> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let p = RowParser { path, line };
        let t = p.number("t", cols.get(&rec, 0).ok_or_else(|| p.err("t is empty"))?)?;
        let truth = p.point(["truth_e", "truth_n"], cols.get(&rec, 1), cols.get(&rec, 2))?;
        let meas = p.point(["meas_e", "meas_n"], cols.get(&rec, 3), cols.get(&rec, 4))?;
        let filtered = p.point(["filt_e", "filt_n"], cols.get(&rec, 5), cols.get(&rec, 6))?;
        let dropped = match cols.get(&rec, 7) {
            None => meas.is_none(),
            Some("0") => false,
            Some("1") => true,
            Some(other) => return Err(p.err(format!("dropped must be 0 or 1, got {other:?}"))),
        };
        if !dropped && meas.is_none() {
            return Err(p.err("measurement missing on a row not marked dropped"));
        }
        if let Some(last) = rows.last() {
            if !(t > last.t) {
                return Err(PipelineError::NonMonotoneTime {
                    path: path.to_path_buf(),
                    line,
                    t,
                });
            }
        }
        rows.push(TrackRow {
            t,
            truth,
            measurement: if dropped { None } else { meas },
            filtered,
        });
    }
    Ok(rows)
}

/// Parses a measurement file into track samples (filtered columns ignored).
pub fn ingest_measurements(path: &Path) -> Result<Vec<TrackSample>, PipelineError> {
    Ok(read_track_csv(path)?.iter().map(TrackRow::sample).collect())
}

/// Reads a prediction file, grouping consecutive rows by `issued_t`.
pub fn read_predictions_csv(path: &Path) -> Result<Vec<PredictedTrajectory>, PipelineError> {
    let (mut reader, header) = open(path)?;
    let cols = Columns::new(&header, &PREDICTION_HEADER);
    if let Some(i) = cols.idx.iter().position(Option::is_none) {
        return Err(PipelineError::Parse {
            path: path.to_path_buf(),
            line: Some(1),
            msg: format!("missing required column {:?}", PREDICTION_HEADER[i]),
        });
    }
    let mut out: Vec<PredictedTrajectory> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let p = RowParser { path, line };
        let field = |i: usize| {
            cols.get(&rec, i)
                .ok_or_else(|| p.err(format!("{} is empty", PREDICTION_HEADER[i])))
        };
        let issued = p.number("issued_t", field(0)?)?;
        let step: usize = field(1)?
            .parse()
            .map_err(|_| p.err("horizon_step must be a positive integer"))?;
        let t = p.number("pred_t", field(2)?)?;
        let pos = Vec2::new(
            p.number("pred_e", field(3)?)?,
            p.number("pred_n", field(4)?)?,
        );
        match out.last_mut() {
            Some(traj) if traj.start_t == issued => {
                if step != traj.points.len() + 1 {
                    return Err(p.err(format!("horizon_step {step} out of sequence")));
                }
                traj.points.push((t, pos));
            }
            _ => {
                if step != 1 {
                    return Err(p.err("a new prediction must start at horizon_step 1"));
                }
                out.push(PredictedTrajectory {
                    start_t: issued,
                    points: vec![(t, pos)],
                });
            }
        }
    }
    Ok(out)
}
