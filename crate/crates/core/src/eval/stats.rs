//! Error statistics over matched estimate / ground-truth pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, norm};

/// Width of the error-vs-distance bins, m.
pub const DISTANCE_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub error_cm: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceBin {
    /// m
    pub center: f64,
    pub mean_error_cm: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Per matched frame, cm, in input order.
    pub errors_cm: Vec<f64>,
    pub mean_cm: f64,
    /// Population standard deviation.
    pub std_cm: f64,
    pub max_cm: f64,
    pub min_cm: f64,
    pub cdf: Vec<CdfPoint>,
    pub by_distance: Vec<DistanceBin>,
    /// Frames where the pipeline found no target.
    pub dropped_frames: usize,
    /// Frames where the pipeline failed outright.
    pub failed_frames: usize,
}

/// Outcome of one pipeline on one labelled frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrameOutcome {
    Estimate([f64; 3]),
    NoTarget,
    Failed,
}

/// `pairs` are (outcome, ground truth) per frame. No-target and failed
/// frames are counted and left out of the statistics.
pub fn error_stats(pairs: &[(FrameOutcome, [f64; 3])]) -> Result<ErrorReport> {
    let mut errors = Vec::with_capacity(pairs.len());
    let mut ranges = Vec::with_capacity(pairs.len());
    let (mut dropped, mut failed) = (0, 0);
    for (outcome, gt) in pairs {
        match outcome {
            FrameOutcome::Estimate(p) => {
                errors.push(100.0 * distance(*p, *gt));
                ranges.push(norm(*gt));
            }
            FrameOutcome::NoTarget => dropped += 1,
            FrameOutcome::Failed => failed += 1,
        }
    }
    if errors.is_empty() {
        return Err(Error::input(format!("no matched frames to score ({dropped} without target, {failed} failed)")));
    }
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
    let max = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = errors.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ErrorReport {
        cdf: cdf(&errors),
        by_distance: error_vs_distance(&errors, &ranges, DISTANCE_STEP)?,
        mean_cm: mean.clamp(min, max),
        std_cm: var.sqrt(),
        max_cm: max,
        min_cm: min,
        errors_cm: errors,
        dropped_frames: dropped,
        failed_frames: failed,
    })
}

/// Empirical CDF: sorted errors, each with the fraction of errors at or
/// below it. Repeated values keep only their last (largest) fraction.
pub fn cdf(errors: &[f64]) -> Vec<CdfPoint> {
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut out: Vec<CdfPoint> = Vec::with_capacity(n);
    for (i, e) in sorted.into_iter().enumerate() {
        let fraction = if i + 1 == n { 1.0 } else { (i + 1) as f64 / n as f64 };
        match out.last_mut() {
            Some(last) if last.error_cm == e => last.fraction = fraction,
            _ => out.push(CdfPoint { error_cm: e, fraction }),
        }
    }
    out
}

/// Fraction of errors at or below `e`.
pub fn cdf_at(cdf: &[CdfPoint], e: f64) -> f64 {
    let k = cdf.partition_point(|p| p.error_cm <= e);
    if k == 0 {
        0.0
    } else {
        cdf[k - 1].fraction
    }
}

fn bin_index(r: f64, step: f64) -> i64 {
    let mut k = (r / step).floor();
    // Guard against r/step landing just below an integer.
    if (k + 1.0) * step <= r {
        k += 1.0;
    }
    k as i64
}

/// Mean error per `[k step, (k+1) step)` range bin; empty bins omitted.
pub fn error_vs_distance(errors: &[f64], gt_ranges: &[f64], step: f64) -> Result<Vec<DistanceBin>> {
    if errors.len() != gt_ranges.len() {
        return Err(Error::input("errors and ranges differ in length"));
    }
    if !(step > 0.0) {
        return Err(Error::input("distance step must be positive"));
    }
    let mut bins: std::collections::BTreeMap<i64, (f64, usize)> = Default::default();
    for (e, r) in errors.iter().zip(gt_ranges) {
        let b = bins.entry(bin_index(*r, step)).or_default();
        b.0 += e;
        b.1 += 1;
    }
    Ok(bins
        .into_iter()
        .map(|(k, (sum, count))| DistanceBin {
            center: (k as f64 + 0.5) * step,
            mean_error_cm: sum / count as f64,
            count,
        })
        .collect())
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        // Ties share the average of their 1-based ranks.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties. `None` when
/// either side is constant or there are fewer than 2 points.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spearman correlation of the binned error-vs-distance curve.
pub fn distance_trend(bins: &[DistanceBin]) -> Option<f64> {
    let x: Vec<f64> = bins.iter().map(|b| b.center).collect();
    let y: Vec<f64> = bins.iter().map(|b| b.mean_error_cm).collect();
    spearman(&x, &y)
}
