//! The three FFT-based localizers: point cloud, 2D FFT and 3D FFT.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::array::{VirtualArrayLayout, NUM_VIRTUAL};
use crate::cube::DataCube;
use crate::dsp::aoa::{aoa_with, ANGLE_FFT_SIZE};
use crate::dsp::cfar::{cfar_2d, CfarParams, Detection};
use crate::dsp::clutter::remove_clutter_in_place;
use crate::dsp::dbscan::dbscan;
use crate::dsp::doppler::{bin_to_range, doppler_fft};
use crate::dsp::range::{hann_window, range_fft, RANGE_FFT_SIZE};
use crate::dsp::sine_dft::{column_sine, SineDft};
use crate::error::{Error, Result};
use crate::geometry::{cosines_to_angles, position_from_cosines, spherical_to_cartesian, PositionEstimate};
use crate::model::RadarConfig;

/// Row-major real map, e.g. range x angle.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Heatmap {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, values: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    /// Largest cell among `rows`; exact ties go to the lowest row, then the
    /// lowest column.
    pub fn argmax(&self, rows: std::ops::Range<usize>) -> (usize, usize, f64) {
        let mut best = (rows.start, 0, f64::NEG_INFINITY);
        for r in rows {
            for (c, &v) in self.row(r).iter().enumerate() {
                if v > best.2 {
                    best = (r, c, v);
                }
            }
        }
        best
    }
}

/// Range bins that can hold a target: above zero and below the real-IF
/// Nyquist limit.
pub fn search_bins(nfft: usize) -> std::ops::Range<usize> {
    1..nfft / 2
}

/// Clutter-removed range profile of one chirp, `[bin][va]`. Removing the
/// chirp mean in the sample domain first means only this chirp needs a
/// range FFT.
pub fn clutter_free_profile(cube: &DataCube, chirp: usize, nfft: usize) -> Result<Vec<Complex64>> {
    Ok(ChirpProfiler::new(cube, nfft)?.profile(cube, chirp))
}

/// Shared state for range profiles of several chirps of one frame.
pub(crate) struct ChirpProfiler {
    nfft: usize,
    mean: Vec<Complex64>,
    window: Vec<f64>,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl ChirpProfiler {
    pub(crate) fn new(cube: &DataCube, nfft: usize) -> Result<Self> {
        let ns = cube.samples_per_chirp();
        if nfft < ns {
            return Err(Error::config(format!("range FFT size {nfft} is smaller than {ns} samples per chirp")));
        }
        if cube.chirps() < 2 {
            return Err(Error::input("clutter removal needs at least 2 chirps"));
        }
        Ok(Self {
            nfft,
            mean: cube.chirp_mean(),
            window: hann_window(ns),
            fft: FftPlanner::new().plan_fft_forward(nfft),
        })
    }

    pub(crate) fn profile(&self, cube: &DataCube, chirp: usize) -> Vec<Complex64> {
        let (ns, nfft) = (cube.samples_per_chirp(), self.nfft);
        let src = cube.chirp(chirp);
        let mut buf = vec![Complex64::default(); nfft * NUM_VIRTUAL];
        for va in 0..NUM_VIRTUAL {
            for m in 0..ns {
                let i = m * NUM_VIRTUAL + va;
                buf[va * nfft + m] = (src[i] - self.mean[i]) * self.window[m];
            }
        }
        self.fft.process(&mut buf);
        let mut out = vec![Complex64::default(); nfft * NUM_VIRTUAL];
        for va in 0..NUM_VIRTUAL {
            for b in 0..nfft {
                out[b * NUM_VIRTUAL + va] = buf[va * nfft + b];
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PointCloudParams {
    pub cfar: CfarParams,
    /// DBSCAN neighbourhood radius, m.
    pub eps: f64,
    pub min_pts: usize,
}

impl Default for PointCloudParams {
    fn default() -> Self {
        Self { cfar: CfarParams::default(), eps: 0.25, min_pts: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CloudPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub radial_velocity: f64,
    pub intensity: f64,
}

impl CloudPoint {
    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct PointCloud {
    pub points: Vec<CloudPoint>,
}

/// Range FFT, clutter removal, Doppler FFT, CFAR, then one angle estimate
/// per detection. Detections outside the searchable range bins or the
/// front half-space are left out of the cloud but still returned.
pub fn point_cloud(
    cube: &DataCube,
    cfg: &RadarConfig,
    layout: &VirtualArrayLayout,
    params: &PointCloudParams,
) -> Result<(PointCloud, Vec<Detection>)> {
    let mut profiles = range_fft(cube, RANGE_FFT_SIZE)?;
    remove_clutter_in_place(&mut profiles)?;
    let map = doppler_fft(&profiles);
    let detections = cfar_2d(&map, cfg, &params.cfar);
    let dft = SineDft::new(8, ANGLE_FFT_SIZE);
    let bins = search_bins(map.range_bins());
    let mut cloud = PointCloud::default();
    for d in &detections {
        if !bins.contains(&d.range_bin) {
            continue;
        }
        let snap = map.snapshot(d.doppler_bin, d.range_bin).expect("maps from doppler_fft carry cells");
        let Ok(angle) = aoa_with(&snap, layout, cfg, &dft) else {
            continue;
        };
        let p = spherical_to_cartesian(d.range, angle.azimuth, angle.elevation);
        if !(p[1] > 0.0) {
            continue;
        }
        cloud.points.push(CloudPoint {
            x: p[0],
            y: p[1],
            z: p[2],
            radial_velocity: d.radial_velocity,
            intensity: map.value(d.doppler_bin, d.range_bin),
        });
    }
    Ok((cloud, detections))
}

/// Centroid of the largest DBSCAN cluster (lowest cluster id on ties).
pub fn largest_cluster_centroid(cloud: &PointCloud, eps: f64, min_pts: usize) -> Result<[f64; 3]> {
    let pts: Vec<[f64; 3]> = cloud.points.iter().map(CloudPoint::position).collect();
    let labels = dbscan(&pts, eps, min_pts)?;
    let clusters = labels.iter().flatten().max().map_or(0, |m| m + 1);
    if clusters == 0 {
        return Err(Error::NoTarget);
    }
    let mut count = vec![0usize; clusters];
    let mut sum = vec![[0.0f64; 3]; clusters];
    for (p, l) in pts.iter().zip(&labels) {
        if let Some(l) = *l {
            count[l] += 1;
            for k in 0..3 {
                sum[l][k] += p[k];
            }
        }
    }
    let mut best = 0;
    for c in 1..clusters {
        if count[c] > count[best] {
            best = c;
        }
    }
    let n = count[best] as f64;
    Ok(sum[best].map(|s| s / n))
}

pub fn locate_point_cloud(
    cube: &DataCube,
    cfg: &RadarConfig,
    layout: &VirtualArrayLayout,
    params: &PointCloudParams,
) -> Result<PositionEstimate> {
    let (cloud, _) = point_cloud(cube, cfg, layout, params)?;
    let p = largest_cluster_centroid(&cloud, params.eps, params.min_pts)?;
    Ok(PositionEstimate::new(p, cube.timestamp))
}

/// Range-azimuth map from the 8-element aperture and range-elevation map
/// from the 4 vertical pairs (magnitudes summed over pairs), both
/// `RANGE_FFT_SIZE x ANGLE_FFT_SIZE`, for the clutter-removed chirp 0.
/// Columns are shifted sine-space bins; the middle column is boresight.
pub fn fft_2d_heatmaps(cube: &DataCube, layout: &VirtualArrayLayout) -> Result<(Heatmap, Heatmap)> {
    let profile = clutter_free_profile(cube, 0, RANGE_FFT_SIZE)?;
    let aperture = layout.azimuth_aperture();
    let az_dft = SineDft::new(8, ANGLE_FFT_SIZE);
    let el_dft = SineDft::new(2, ANGLE_FFT_SIZE);
    let mut az = Heatmap::zeros(RANGE_FFT_SIZE, ANGLE_FFT_SIZE);
    let mut el = Heatmap::zeros(RANGE_FFT_SIZE, ANGLE_FFT_SIZE);
    let mut mags = vec![0.0; ANGLE_FFT_SIZE];
    for b in 0..RANGE_FFT_SIZE {
        let cell = &profile[b * NUM_VIRTUAL..(b + 1) * NUM_VIRTUAL];
        let taps: [Complex64; 8] = std::array::from_fn(|i| cell[aperture[i]]);
        az_dft.magnitudes(&taps, &mut az.values[b * ANGLE_FFT_SIZE..(b + 1) * ANGLE_FFT_SIZE]);
        let row = &mut el.values[b * ANGLE_FFT_SIZE..(b + 1) * ANGLE_FFT_SIZE];
        for &(lo, hi) in &layout.elevation_pairs {
            el_dft.magnitudes(&[cell[lo], cell[hi]], &mut mags);
            for (r, m) in row.iter_mut().zip(&mags) {
                *r += m;
            }
        }
    }
    Ok((az, el))
}

/// Where the 2D FFT localizer looked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fft2dPeak {
    pub range_bin: usize,
    pub azimuth_col: usize,
    /// Range bin of the elevation map's own maximum.
    pub elevation_range_bin: usize,
    pub elevation_col: usize,
}

pub fn fft_2d_peak(az: &Heatmap, el: &Heatmap) -> Result<Fft2dPeak> {
    let bins = search_bins(az.rows);
    let (range_bin, azimuth_col, v) = az.argmax(bins.clone());
    let (elevation_range_bin, elevation_col, ve) = el.argmax(bins);
    if !(v > 0.0 && ve > 0.0) {
        return Err(Error::NoTarget);
    }
    Ok(Fft2dPeak { range_bin, azimuth_col, elevation_range_bin, elevation_col })
}

/// Global maxima of the two maps combined into one position. The range
/// and `u` come from the azimuth map, `w` from wherever the elevation map
/// peaks, so a spurious elevation peak is not caught here.
pub fn locate_fft_2d(cube: &DataCube, cfg: &RadarConfig, layout: &VirtualArrayLayout) -> Result<PositionEstimate> {
    let (az, el) = fft_2d_heatmaps(cube, layout)?;
    let peak = fft_2d_peak(&az, &el)?;
    let r = bin_to_range(peak.range_bin, RANGE_FFT_SIZE, cfg);
    let u = column_sine(peak.azimuth_col, ANGLE_FFT_SIZE);
    let w = column_sine(peak.elevation_col, ANGLE_FFT_SIZE);
    let (azimuth, elevation) = cosines_to_angles(u, w);
    Ok(PositionEstimate::new(spherical_to_cartesian(r, azimuth, elevation), cube.timestamp))
}

/// Peak of the joint range x u x w magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fft3dPeak {
    pub range_bin: usize,
    pub u_col: usize,
    pub w_col: usize,
    pub range: f64,
    pub u: f64,
    pub w: f64,
}

/// Joint argmax over range bins and the visible part of the
/// `ANGLE_FFT_SIZE x ANGLE_FFT_SIZE` direction-cosine grid, from the full
/// sample x antenna-plane data of the clutter-removed chirp 0. The 2-D
/// angle FFT is separable: one 8-tap transform per antenna row along x,
/// then a combination of the rows along z.
pub fn fft_3d_peak(cube: &DataCube, cfg: &RadarConfig, layout: &VirtualArrayLayout) -> Result<Fft3dPeak> {
    let profile = clutter_free_profile(cube, 0, RANGE_FFT_SIZE)?;
    let n = ANGLE_FFT_SIZE;
    // Antennas grouped by row height.
    let mut heights: Vec<f64> = layout.positions.iter().map(|p| p.1).collect();
    heights.sort_by(f64::total_cmp);
    heights.dedup();
    let rows: Vec<Vec<(usize, usize)>> = heights
        .iter()
        .map(|&z| {
            (0..NUM_VIRTUAL)
                .filter(|&v| layout.positions[v].1 == z)
                .map(|v| (v, layout.positions[v].0 as usize))
                .collect()
        })
        .collect();
    let taps = layout.positions.iter().map(|p| p.0 as usize).max().unwrap_or(0) + 1;
    let dft = SineDft::new(taps, n);
    // exp(-j pi z w) per w column and row.
    let z_tw: Vec<Complex64> = (0..n)
        .flat_map(|k| {
            let s = column_sine(k, n);
            heights.iter().map(move |&z| Complex64::from_polar(1.0, -std::f64::consts::PI * z * s))
        })
        .collect();
    let sines: Vec<f64> = (0..n).map(|k| column_sine(k, n)).collect();

    let nz = heights.len();
    let mut spectra = vec![Complex64::default(); nz * n];
    let mut row_taps = vec![Complex64::default(); taps];
    let mut best: Option<(f64, usize, usize, usize)> = None;
    for b in search_bins(RANGE_FFT_SIZE) {
        let cell = &profile[b * NUM_VIRTUAL..(b + 1) * NUM_VIRTUAL];
        for (zi, row) in rows.iter().enumerate() {
            row_taps.fill(Complex64::default());
            for &(v, x) in row {
                row_taps[x] = cell[v];
            }
            dft.transform(&row_taps, &mut spectra[zi * n..(zi + 1) * n]);
        }
        for ui in 0..n {
            let u2 = sines[ui] * sines[ui];
            for wi in 0..n {
                if u2 + sines[wi] * sines[wi] > 1.0 {
                    continue;
                }
                let tw = &z_tw[wi * nz..(wi + 1) * nz];
                let mut acc = Complex64::default();
                for zi in 0..nz {
                    acc += spectra[zi * n + ui] * tw[zi];
                }
                let v = acc.norm_sqr();
                if best.is_none_or(|bv| v > bv.0) {
                    best = Some((v, b, ui, wi));
                }
            }
        }
    }
    match best {
        Some((v, b, ui, wi)) if v > 0.0 => Ok(Fft3dPeak {
            range_bin: b,
            u_col: ui,
            w_col: wi,
            range: bin_to_range(b, RANGE_FFT_SIZE, cfg),
            u: sines[ui],
            w: sines[wi],
        }),
        _ => Err(Error::NoTarget),
    }
}

pub fn locate_fft_3d(cube: &DataCube, cfg: &RadarConfig, layout: &VirtualArrayLayout) -> Result<PositionEstimate> {
    let peak = fft_3d_peak(cube, cfg, layout)?;
    let p = position_from_cosines(peak.range, peak.u, peak.w).ok_or(Error::NoTarget)?;
    Ok(PositionEstimate::new(p, cube.timestamp))
}
