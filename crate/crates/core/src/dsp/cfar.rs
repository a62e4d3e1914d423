//! Two-dimensional cell-averaging CFAR.
//!
//! Around each cell under test a rectangle of training cells, minus an
//! inner guard rectangle, estimates the local noise level. Windows are
//! clamped at the map edges, and the threshold factor is recomputed for
//! the number of training cells that actually remain, so the false-alarm
//! rate holds there too.

use crate::dsp::doppler::{bin_to_range, RangeDopplerMap};
use crate::model::RadarConfig;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CfarParams {
    /// Guard half-widths as (doppler, range) cells.
    pub guard: (usize, usize),
    /// Training half-widths beyond the guard, (doppler, range).
    pub train: (usize, usize),
    pub pfa: f64,
}

impl Default for CfarParams {
    fn default() -> Self {
        Self { guard: (2, 2), train: (4, 8), pfa: 1e-3 }
    }
}

impl CfarParams {
    /// Threshold multiplier for `n` training cells.
    pub fn alpha(&self, n: usize) -> f64 {
        let n = n as f64;
        n * (self.pfa.powf(-1.0 / n) - 1.0)
    }
}

/// A cell that crossed its threshold, in map coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfarHit {
    pub row: usize,
    pub col: usize,
    /// Cell value over the training mean, dB.
    pub snr_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Detection {
    pub range_bin: usize,
    /// fftshifted Doppler bin.
    pub doppler_bin: usize,
    /// m
    pub range: f64,
    /// m/s, positive receding.
    pub radial_velocity: f64,
    pub snr_db: f64,
}

struct SummedArea {
    cols: usize,
    sums: Vec<f64>,
}

impl SummedArea {
    fn new(values: &[f64], rows: usize, cols: usize) -> Self {
        let w = cols + 1;
        let mut sums = vec![0.0; (rows + 1) * w];
        for r in 0..rows {
            let mut run = 0.0;
            for c in 0..cols {
                run += values[r * cols + c];
                sums[(r + 1) * w + c + 1] = sums[r * w + c + 1] + run;
            }
        }
        Self { cols, sums }
    }

    /// Sum over rows `r0..r1`, cols `c0..c1` (half-open).
    fn rect(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> f64 {
        let w = self.cols + 1;
        self.sums[r1 * w + c1] - self.sums[r0 * w + c1] - self.sums[r1 * w + c0] + self.sums[r0 * w + c0]
    }
}

/// CA-CFAR over a row-major `rows x cols` grid of non-negative values.
/// Hits come back strongest first; equal SNRs keep row-major order.
pub fn ca_cfar(values: &[f64], rows: usize, cols: usize, params: &CfarParams) -> Vec<CfarHit> {
    assert_eq!(values.len(), rows * cols);
    let sat = SummedArea::new(values, rows, cols);
    let (gr, gc) = params.guard;
    let (tr, tc) = (params.guard.0 + params.train.0, params.guard.1 + params.train.1);
    let mut alphas: Vec<f64> = Vec::new();
    let mut hits = Vec::new();
    for r in 0..rows {
        let (or0, or1) = (r.saturating_sub(tr), (r + tr + 1).min(rows));
        let (ir0, ir1) = (r.saturating_sub(gr), (r + gr + 1).min(rows));
        for c in 0..cols {
            let v = values[r * cols + c];
            if v <= 0.0 {
                continue;
            }
            let (oc0, oc1) = (c.saturating_sub(tc), (c + tc + 1).min(cols));
            let (ic0, ic1) = (c.saturating_sub(gc), (c + gc + 1).min(cols));
            let n = (or1 - or0) * (oc1 - oc0) - (ir1 - ir0) * (ic1 - ic0);
            if n == 0 {
                continue;
            }
            let noise = (sat.rect(or0, or1, oc0, oc1) - sat.rect(ir0, ir1, ic0, ic1)).max(0.0);
            if alphas.len() <= n {
                alphas.resize(n + 1, f64::NAN);
            }
            if alphas[n].is_nan() {
                alphas[n] = params.alpha(n);
            }
            // v > alpha * noise / n, kept free of a division.
            if v * n as f64 > alphas[n] * noise {
                let snr_db = if noise > 0.0 { 20.0 * (v * n as f64 / noise).log10() } else { f64::INFINITY };
                hits.push(CfarHit { row: r, col: c, snr_db });
            }
        }
    }
    hits.sort_by(|a, b| b.snr_db.total_cmp(&a.snr_db));
    hits
}

/// CFAR over a range-Doppler map; rows are Doppler bins, columns range bins.
pub fn cfar_2d(map: &RangeDopplerMap, cfg: &RadarConfig, params: &CfarParams) -> Vec<Detection> {
    ca_cfar(map.values(), map.doppler_bins(), map.range_bins(), params)
        .into_iter()
        .map(|h| Detection {
            range_bin: h.col,
            doppler_bin: h.row,
            range: bin_to_range(h.col, map.range_bins(), cfg),
            radial_velocity: map.bin_velocity(h.row, cfg),
            snr_db: h.snr_db,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn alpha_default() {
        let p = CfarParams::default();
        // 13 x 21 window minus the 5 x 5 guard.
        let n = 13 * 21 - 25;
        assert!((p.alpha(n) - n as f64 * (1e3f64.powf(1.0 / n as f64) - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_map_has_no_detections() {
        let map = RangeDopplerMap::from_values(32, 64, vec![0.0; 32 * 64]).unwrap();
        assert!(cfar_2d(&map, &RadarConfig::default(), &CfarParams::default()).is_empty());
    }

    #[test]
    fn single_peak_on_flat_floor() {
        let (rows, cols) = (64, 128);
        let mut values = vec![1.0; rows * cols];
        values[30 * cols + 77] = 100.0;
        let map = RangeDopplerMap::from_values(rows, cols, values).unwrap();
        let cfg = RadarConfig::default();
        let d = cfar_2d(&map, &cfg, &CfarParams::default());
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].doppler_bin, d[0].range_bin), (30, 77));
        assert_eq!(d[0].radial_velocity, 0.0 - 2.0 * cfg.derived().velocity_resolution);
    }

    #[test]
    fn injected_peak_in_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (rows, cols) = (128, 256);
        let mut values: Vec<f64> = (0..rows * cols).map(|_| -rng.random::<f64>().ln()).collect();
        values[40 * cols + 100] = 100.0;
        let hits = ca_cfar(&values, rows, cols, &CfarParams::default());
        assert_eq!((hits[0].row, hits[0].col), (40, 100));
        assert!(hits[0].snr_db > 19.0);
    }

    #[test]
    fn false_alarm_rate_calibrated() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (rows, cols) = (256, 512);
        let values: Vec<f64> = (0..rows * cols).map(|_| -rng.random::<f64>().ln()).collect();
        let rate = ca_cfar(&values, rows, cols, &CfarParams::default()).len() as f64 / (rows * cols) as f64;
        assert!((0.5e-3..=2e-3).contains(&rate), "{rate}");
    }

    proptest! {
        #[test]
        fn scale_invariant(seed in 0u64..1000, exp in -20i32..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (rows, cols) = (24, 40);
            let values: Vec<f64> = (0..rows * cols).map(|_| -rng.random::<f64>().ln()).collect();
            let scaled: Vec<f64> = values.iter().map(|v| v * 2f64.powi(exp)).collect();
            let p = CfarParams::default();
            let a: Vec<_> = ca_cfar(&values, rows, cols, &p).iter().map(|h| (h.row, h.col)).collect();
            let b: Vec<_> = ca_cfar(&scaled, rows, cols, &p).iter().map(|h| (h.row, h.col)).collect();
            prop_assert_eq!(a, b);
        }
    }
}
