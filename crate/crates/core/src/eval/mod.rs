//! Scoring: error statistics, CDFs, error-vs-distance and per-frame
//! runtime across the classical pipelines.
//!
//! `report.json` written by [`BenchReport::write_artifacts`]:
//!
//! ```text
//! {
//!   "schema": "radloc-bench-report/1",
//!   "frames": 6000,             // frames read
//!   "unlabelled_frames": 0,     // frames without ground truth (timed, not scored)
//!   "warmup_frames": 5,         // first frames left out of the runtime means
//!   "methods": [ { "method": "fft2d", "scored_frames", "dropped_frames",
//!                  "failed_frames", "mean_cm", "std_cm", "max_cm", "min_cm",
//!                  "distance_spearman" } ],   // stats null if nothing scored
//!   "runtimes": [ { "method", "mean_ms", "workers", "timed_frames" } ]
//! }
//! ```
//!
//! Next to it: `cdf_<method>.csv` (`error_cm,fraction`) and
//! `err_vs_dist_<method>.csv` (`distance_m,mean_error_cm,count`).

mod stats;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::array::VirtualArrayLayout;
use crate::cube::DataCube;
use crate::dsp::{locate_fft_2d, locate_fft_3d, locate_point_cloud, PointCloudParams};
use crate::error::{Error, Result};
use crate::geometry::PositionEstimate;
use crate::model::RadarConfig;
use crate::music::{locate_music_2d, locate_music_3d, MusicParams, SweepGrid};

pub use stats::{
    cdf, cdf_at, distance_trend, error_stats, error_vs_distance, spearman, CdfPoint, DistanceBin, ErrorReport,
    FrameOutcome, DISTANCE_STEP,
};

/// Frames at the start of a run left out of runtime means.
pub const WARMUP_FRAMES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    PointCloud,
    Fft2d,
    Fft3d,
    Music2d,
    Music3d,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::PointCloud, Method::Fft2d, Method::Fft3d, Method::Music2d, Method::Music3d];

    pub fn name(self) -> &'static str {
        match self {
            Method::PointCloud => "pointcloud",
            Method::Fft2d => "fft2d",
            Method::Fft3d => "fft3d",
            Method::Music2d => "music2d",
            Method::Music3d => "music3d",
        }
    }

    pub fn is_music(self) -> bool {
        matches!(self, Method::Music2d | Method::Music3d)
    }

    pub fn valid_names() -> String {
        Self::ALL.map(Method::name).join(", ")
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::input(format!("unknown method {s:?}; valid methods: {}", Self::valid_names())))
    }
}

/// Everything the five pipelines need, bundled.
#[derive(Debug, Clone)]
pub struct Localizer {
    pub cfg: RadarConfig,
    pub layout: VirtualArrayLayout,
    pub point_cloud: PointCloudParams,
    pub grid: SweepGrid,
    pub music: MusicParams,
}

impl Localizer {
    pub fn new(cfg: RadarConfig) -> Self {
        Self {
            cfg,
            layout: VirtualArrayLayout::default(),
            point_cloud: PointCloudParams::default(),
            grid: SweepGrid::default(),
            music: MusicParams::default(),
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.music.workers = workers;
        self
    }

    pub fn locate(&self, method: Method, cube: &DataCube) -> Result<PositionEstimate> {
        let (cfg, layout) = (&self.cfg, &self.layout);
        match method {
            Method::PointCloud => locate_point_cloud(cube, cfg, layout, &self.point_cloud),
            Method::Fft2d => locate_fft_2d(cube, cfg, layout),
            Method::Fft3d => locate_fft_3d(cube, cfg, layout),
            Method::Music2d => Ok(locate_music_2d(cube, cfg, layout, &self.grid, &self.music)?.estimate),
            Method::Music3d => Ok(locate_music_3d(cube, cfg, layout, &self.grid, &self.music)?.estimate),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimeReport {
    pub method: Method,
    pub mean_ms: f64,
    pub workers: usize,
    pub timed_frames: usize,
}

#[derive(Debug, Clone)]
pub struct MethodReport {
    pub method: Method,
    /// `None` when no frame produced an estimate.
    pub error: Option<ErrorReport>,
    pub runtime: RuntimeReport,
    pub dropped_frames: usize,
    pub failed_frames: usize,
    /// Messages of failed frames, `(frame_index, message)`.
    pub failures: Vec<(u64, String)>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub frames: usize,
    pub unlabelled_frames: usize,
    pub warmup_frames: usize,
    pub methods: Vec<MethodReport>,
}

#[derive(Serialize)]
struct MethodJson {
    method: Method,
    scored_frames: usize,
    dropped_frames: usize,
    failed_frames: usize,
    mean_cm: Option<f64>,
    std_cm: Option<f64>,
    max_cm: Option<f64>,
    min_cm: Option<f64>,
    distance_spearman: Option<f64>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    schema: &'static str,
    frames: usize,
    unlabelled_frames: usize,
    warmup_frames: usize,
    methods: Vec<MethodJson>,
    runtimes: Vec<&'a RuntimeReport>,
}

#[derive(Serialize)]
struct CdfRow {
    error_cm: f64,
    fraction: f64,
}

#[derive(Serialize)]
struct DistanceRow {
    distance_m: f64,
    mean_error_cm: f64,
    count: usize,
}

impl BenchReport {
    pub fn runtimes(&self) -> Vec<&RuntimeReport> {
        self.methods.iter().map(|m| &m.runtime).collect()
    }

    pub fn method(&self, m: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|r| r.method == m)
    }

    pub fn to_json(&self) -> Result<String> {
        let methods = self
            .methods
            .iter()
            .map(|m| {
                let e = m.error.as_ref();
                MethodJson {
                    method: m.method,
                    scored_frames: e.map_or(0, |e| e.errors_cm.len()),
                    dropped_frames: m.dropped_frames,
                    failed_frames: m.failed_frames,
                    mean_cm: e.map(|e| e.mean_cm),
                    std_cm: e.map(|e| e.std_cm),
                    max_cm: e.map(|e| e.max_cm),
                    min_cm: e.map(|e| e.min_cm),
                    distance_spearman: e.and_then(|e| distance_trend(&e.by_distance)),
                }
            })
            .collect();
        let json = ReportJson {
            schema: "radloc-bench-report/1",
            frames: self.frames,
            unlabelled_frames: self.unlabelled_frames,
            warmup_frames: self.warmup_frames,
            methods,
            runtimes: self.runtimes(),
        };
        serde_json::to_string_pretty(&json).map_err(|e| Error::input(format!("report serialization: {e}")))
    }

    /// Writes `report.json` and the per-method CSV curves into `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()? + "\n")?;
        for m in &self.methods {
            let (cdf_rows, dist_rows) = match &m.error {
                Some(e) => (
                    e.cdf.iter().map(|p| CdfRow { error_cm: p.error_cm, fraction: p.fraction }).collect(),
                    e.by_distance
                        .iter()
                        .map(|b| DistanceRow { distance_m: b.center, mean_error_cm: b.mean_error_cm, count: b.count })
                        .collect(),
                ),
                None => (Vec::new(), Vec::new()),
            };
            crate::io::write_csv(&dir.join(format!("cdf_{}.csv", m.method)), &cdf_rows)?;
            crate::io::write_csv(&dir.join(format!("err_vs_dist_{}.csv", m.method)), &dist_rows)?;
        }
        Ok(())
    }
}

/// Runs every method on every frame, one method at a time per frame, and
/// scores labelled frames. Frame read errors abort; pipeline errors are
/// recorded and the run continues. The first `warmup` frames are not timed.
pub fn run_benchmark<I>(frames: I, methods: &[Method], localizer: &Localizer, warmup: usize) -> Result<BenchReport>
where
    I: IntoIterator<Item = Result<(DataCube, Option<[f64; 3]>)>>,
{
    if methods.is_empty() {
        return Err(Error::input("no pipelines selected"));
    }
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();

    struct Acc {
        pairs: Vec<(FrameOutcome, [f64; 3])>,
        total_ms: f64,
        timed: usize,
        dropped: usize,
        failures: Vec<(u64, String)>,
    }
    let mut acc: Vec<Acc> = methods
        .iter()
        .map(|_| Acc { pairs: Vec::new(), total_ms: 0.0, timed: 0, dropped: 0, failures: Vec::new() })
        .collect();
    let (mut n, mut unlabelled) = (0, 0);
    for item in frames {
        let (cube, label) = item?;
        for (m, a) in methods.iter().zip(acc.iter_mut()) {
            let start = Instant::now();
            let result = localizer.locate(*m, &cube);
            let ms = start.elapsed().as_secs_f64() * 1e3;
            if n >= warmup {
                a.total_ms += ms;
                a.timed += 1;
            }
            let outcome = match result {
                Ok(est) if est.is_finite() => FrameOutcome::Estimate(est.position()),
                Ok(_) => {
                    a.failures.push((cube.frame_index, "non-finite estimate".into()));
                    FrameOutcome::Failed
                }
                Err(Error::NoTarget) => {
                    a.dropped += 1;
                    FrameOutcome::NoTarget
                }
                Err(e) => {
                    log::warn!("{m} failed on frame {}: {e}", cube.frame_index);
                    a.failures.push((cube.frame_index, e.to_string()));
                    FrameOutcome::Failed
                }
            };
            if let Some(gt) = label {
                a.pairs.push((outcome, gt));
            }
        }
        if label.is_none() {
            unlabelled += 1;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::input("benchmark has no frames"));
    }
    let workers = |m: Method| if m.is_music() { localizer.music.workers } else { 1 };
    let methods = methods
        .into_iter()
        .zip(acc)
        .map(|(m, a)| MethodReport {
            method: m,
            error: error_stats(&a.pairs).ok(),
            runtime: RuntimeReport {
                method: m,
                mean_ms: if a.timed > 0 { a.total_ms / a.timed as f64 } else { f64::NAN },
                workers: workers(m),
                timed_frames: a.timed,
            },
            dropped_frames: a.dropped,
            failed_frames: a.failures.len(),
            failures: a.failures,
        })
        .collect();
    Ok(BenchReport { frames: n, unlabelled_frames: unlabelled, warmup_frames: warmup.min(n), methods })
}
