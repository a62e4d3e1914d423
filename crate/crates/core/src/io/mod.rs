//! Captures, datasets on disk, ground-truth alignment and the CSV files
//! shared with the evaluation tools.

pub mod dataset;
pub mod rcub;

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::dsp::Detection;
use crate::error::{Error, Result};
use crate::geometry::PositionEstimate;

pub use dataset::{sequence_dirs, write_simulated_sequence, Dataset, SequenceSummary, SIM_INT16_GAIN};
pub use rcub::{
    frame_bytes, parse_capture, serialize_capture, CaptureReader, CaptureWriter, RawCaptureHeader, SampleEncoding,
    RCUB_HEADER_LEN,
};

/// `t_i = start_time + i * frame_period`.
pub fn extrapolate_timestamps(start_time: f64, frame_period: f64, n_frames: usize) -> Vec<f64> {
    (0..n_frames).map(|i| start_time + i as f64 * frame_period).collect()
}

/// One ground-truth sample; the `gt.csv` row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtSample {
    pub frame_index: u64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl GtSample {
    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// Interpolated position per frame; `None` outside the gt time span.
    pub labels: Vec<Option<[f64; 3]>>,
    pub dropped: usize,
}

/// Index `i` of the gt interval `[t_i, t_{i+1}]` holding `t`, or `None`
/// outside the span. A time equal to a sample belongs to the interval that
/// starts there (the last sample closes the last interval).
pub fn gt_interval(gt: &[GtSample], t: f64) -> Option<usize> {
    let n = gt.len();
    if n < 2 || !(t >= gt[0].t && t <= gt[n - 1].t) {
        return None;
    }
    let after = gt.partition_point(|s| s.t <= t);
    Some((after - 1).min(n - 2))
}

/// Linear interpolation of the gt trajectory at every frame time.
pub fn align_ground_truth(frame_times: &[f64], gt: &[GtSample]) -> Result<Alignment> {
    if gt.len() < 2 {
        return Err(Error::input(format!("ground truth needs at least 2 samples, got {}", gt.len())));
    }
    if let Some(i) = gt.windows(2).position(|w| !(w[1].t >= w[0].t)) {
        return Err(Error::input(format!("ground truth is not time-sorted at row {}", i + 1)));
    }
    let mut labels = Vec::with_capacity(frame_times.len());
    let mut dropped = 0;
    for &t in frame_times {
        let Some(i) = gt_interval(gt, t) else {
            dropped += 1;
            labels.push(None);
            continue;
        };
        let (a, b) = (&gt[i], &gt[i + 1]);
        let span = b.t - a.t;
        let f = if span > 0.0 { (t - a.t) / span } else { 0.0 };
        let pa = a.position();
        let pb = b.position();
        labels.push(Some(std::array::from_fn(|k| if f == 0.0 { pa[k] } else { pa[k] + f * (pb[k] - pa[k]) })));
    }
    Ok(Alignment { labels, dropped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    Ok,
    NoTarget,
    Error,
}

/// One row of an estimates CSV: `frame,t,x,y,z,status`. Coordinates are
/// empty unless the status is `ok`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub frame: u64,
    pub t: f64,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub z: Option<f64>,
    pub status: EstimateStatus,
}

impl EstimateRow {
    pub fn from_result(frame: u64, t: f64, r: &Result<PositionEstimate>) -> Self {
        match r {
            Ok(e) => Self { frame, t, x: Some(e.x), y: Some(e.y), z: Some(e.z), status: EstimateStatus::Ok },
            Err(e) => Self {
                frame,
                t,
                x: None,
                y: None,
                z: None,
                status: if matches!(e, Error::NoTarget) { EstimateStatus::NoTarget } else { EstimateStatus::Error },
            },
        }
    }

    pub fn position(&self) -> Option<[f64; 3]> {
        match (self.status, self.x, self.y, self.z) {
            (EstimateStatus::Ok, Some(x), Some(y), Some(z)) => Some([x, y, z]),
            _ => None,
        }
    }
}

/// One row of a detections CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub frame: u64,
    pub range_bin: usize,
    pub doppler_bin: usize,
    pub range_m: f64,
    pub velocity_mps: f64,
    pub snr_db: f64,
}

impl DetectionRow {
    pub fn new(frame: u64, d: &Detection) -> Self {
        Self {
            frame,
            range_bin: d.range_bin,
            doppler_bin: d.doppler_bin,
            range_m: d.range,
            velocity_mps: d.radial_velocity,
            snr_db: d.snr_db,
        }
    }
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::Deserialize { err, .. } => {
            Error::Text { path: path.display().to_string(), line, message: err.to_string() }
        }
        other => Error::Text { path: path.display().to_string(), line, message: format!("{other:?}") },
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}
