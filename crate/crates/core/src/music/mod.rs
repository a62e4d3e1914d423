//! Subspace (MUSIC) localization over a range x azimuth x elevation sweep.
//!
//! Snapshots are short fast-time windows of the clutter-removed chirps:
//! each one holds `fast_time_window` consecutive samples of every antenna
//! in use, taken every `window_stride` samples of every chirp. Steering
//! vectors are the matching Kronecker product of a beat tone and antenna
//! phases, so one covariance carries both range and angle.

mod refine;
mod steering;
mod subspace;

use std::num::NonZeroUsize;

use num_complex::Complex64;

use crate::array::{VirtualArrayLayout, NUM_VIRTUAL};
use crate::cube::DataCube;
use crate::error::{Error, Result};
use crate::geometry::{cosines_to_angles, spherical_to_cartesian, PositionEstimate};
use crate::model::RadarConfig;

pub use steering::{steering_vector, GridPoint, SteeringMode};
pub use subspace::{covariance, noise_subspace, CovarianceMatrix};

/// Diagonal loading, relative to the covariance trace.
pub const REGULARIZATION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SweepGrid {
    /// m
    pub ranges: Vec<f64>,
    /// Degrees in the reporting convention: 90 is boresight.
    pub azimuths_deg: Vec<f64>,
    /// Degrees, 0 is boresight.
    pub elevations_deg: Vec<f64>,
}

fn steps(lo: i32, hi: i32, scale: f64) -> Vec<f64> {
    (lo..=hi).map(|i| i as f64 / scale).collect()
}

impl Default for SweepGrid {
    /// 1-4 m in 0.1 m steps, 30-150 deg azimuth and -15..15 deg elevation
    /// in 1 deg steps: 31 x 121 x 31.
    fn default() -> Self {
        Self { ranges: steps(10, 40, 10.0), azimuths_deg: steps(30, 150, 1.0), elevations_deg: steps(-15, 15, 1.0) }
    }
}

impl SweepGrid {
    pub fn validate(&self, cfg: &RadarConfig) -> Result<()> {
        let max_range = cfg.derived().max_range;
        let axes: [(&str, &[f64], f64, f64); 3] = [
            ("ranges", &self.ranges, 0.0, max_range),
            ("azimuths", &self.azimuths_deg, 0.0, 180.0),
            ("elevations", &self.elevations_deg, -90.0, 90.0),
        ];
        for (name, axis, lo, hi) in axes {
            if axis.is_empty() {
                return Err(Error::config(format!("sweep {name} are empty")));
            }
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::config(format!("sweep {name} must be strictly increasing")));
            }
            if axis.iter().any(|v| !(*v >= lo && *v <= hi)) || (name == "ranges" && axis[0] <= 0.0) {
                return Err(Error::config(format!("sweep {name} leave the visible region [{lo}, {hi}]")));
            }
        }
        if self.ranges[self.ranges.len() - 1] >= max_range {
            return Err(Error::config("sweep ranges reach the unambiguous range"));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.ranges.len() * self.azimuths_deg.len() * self.elevations_deg.len()
    }
}

/// Boresight-zero azimuth in rad from the reporting convention.
pub fn internal_azimuth(deg: f64) -> f64 {
    (deg - 90.0).to_radians()
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, NonZeroUsize::get)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MusicParams {
    pub n_sources: usize,
    /// Fast-time samples per snapshot.
    pub fast_time_window: usize,
    /// Samples between successive windows of one chirp.
    pub window_stride: usize,
    /// Threads evaluating grid cells.
    pub workers: usize,
    /// Load the diagonal even when there are enough snapshots.
    pub force_regularization: bool,
    /// Refine the grid argmax to the local spectrum peak between its grid
    /// neighbours. Off reports the grid point itself.
    #[serde(default = "yes")]
    pub refine: bool,
}

fn yes() -> bool {
    true
}

impl Default for MusicParams {
    fn default() -> Self {
        Self {
            n_sources: 1,
            fast_time_window: 4,
            window_stride: 32,
            workers: default_workers(),
            force_regularization: false,
            refine: true,
        }
    }
}

impl MusicParams {
    fn validate(&self, cfg: &RadarConfig) -> Result<()> {
        if self.fast_time_window == 0 || self.fast_time_window > cfg.samples_per_chirp {
            return Err(Error::config(format!("fast_time_window must lie in 1..={}", cfg.samples_per_chirp)));
        }
        if self.window_stride == 0 || self.workers == 0 {
            return Err(Error::config("window_stride and workers must be positive"));
        }
        Ok(())
    }
}

/// Pseudospectrum in dB, `10 log10(1 / a^H E E^H a)`, laid out
/// `[range][azimuth][elevation]`. A 2-D spectrum has a single azimuth or
/// elevation entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Pseudospectrum {
    pub ranges: Vec<f64>,
    pub azimuths_deg: Vec<f64>,
    pub elevations_deg: Vec<f64>,
    pub values_db: Vec<f64>,
}

impl Pseudospectrum {
    #[inline]
    pub fn get(&self, ri: usize, ai: usize, ei: usize) -> f64 {
        self.values_db[(ri * self.azimuths_deg.len() + ai) * self.elevations_deg.len() + ei]
    }

    /// Largest cell; exact ties go to the lowest range, then azimuth, then
    /// elevation index.
    pub fn argmax(&self) -> (usize, usize, usize) {
        let mut best = 0;
        for (i, v) in self.values_db.iter().enumerate() {
            if *v > self.values_db[best] {
                best = i;
            }
        }
        let ne = self.elevations_deg.len();
        let na = self.azimuths_deg.len();
        (best / (na * ne), (best / ne) % na, best % ne)
    }
}

#[derive(Debug, Clone)]
pub struct MusicOutput {
    pub estimate: PositionEstimate,
    /// Whether diagonal loading was applied to any covariance.
    pub regularized: bool,
    /// The spectra searched: one for 3-D, azimuth then elevation for 2-D.
    pub spectra: Vec<Pseudospectrum>,
}

/// Flat snapshots over the given antenna groups: for every chirp, window
/// start and group, `l` samples x group antennas, sample-major.
fn snapshots(cube: &DataCube, groups: &[&[usize]], l: usize, stride: usize) -> Vec<Complex64> {
    let mean = cube.chirp_mean();
    let ns = cube.samples_per_chirp();
    let mut out = Vec::new();
    for c in 0..cube.chirps() {
        let chirp = cube.chirp(c);
        for start in (0..=ns - l).step_by(stride) {
            for group in groups {
                for m in start..start + l {
                    for &v in *group {
                        let i = m * NUM_VIRTUAL + v;
                        out.push(chirp[i] - mean[i]);
                    }
                }
            }
        }
    }
    out
}

/// Conjugated noise basis, `[k][sample][antenna]`, ready for the factored
/// projection `E^H (t kron s) = sum_m t_m (sum_v conj(E[m,v,k]) s_v)`.
struct Projector {
    q: usize,
    l: usize,
    m: usize,
    ec: Vec<Complex64>,
}

impl Projector {
    fn new(e: &nalgebra::DMatrix<Complex64>, l: usize, m: usize) -> Self {
        let q = e.ncols();
        let mut ec = Vec::with_capacity(q * l * m);
        for k in 0..q {
            for i in 0..l * m {
                ec.push(e[(i, k)].conj());
            }
        }
        Self { q, l, m, ec }
    }

    /// dB spectrum at one angle (antenna phases `s`) for every range tone.
    fn eval(&self, s: &[Complex64], tones: &[Vec<Complex64>], b: &mut Vec<Complex64>, out: &mut [f64]) {
        b.clear();
        for chunk in self.ec.chunks_exact(self.m) {
            b.push(chunk.iter().zip(s).map(|(e, x)| e * x).sum());
        }
        for (o, t) in out.iter_mut().zip(tones) {
            let mut denom = 0.0;
            for k in 0..self.q {
                let row = &b[k * self.l..(k + 1) * self.l];
                let p: Complex64 = row.iter().zip(t).map(|(x, y)| x * y).sum();
                denom += p.norm_sqr();
            }
            *o = -10.0 * denom.max(f64::MIN_POSITIVE).log10();
        }
    }
}

impl Projector {
    /// dB spectrum at a single off-grid point.
    fn point(&self, s: &[Complex64], tone: Vec<Complex64>) -> f64 {
        let mut b = Vec::with_capacity(self.q * self.l);
        let mut out = [0.0];
        self.eval(s, &[tone], &mut b, &mut out);
        out[0]
    }
}

/// Evaluates every (angle, range) cell, splitting the angles over
/// `workers` threads. Results are `[angle][range]` and do not depend on
/// the worker count.
fn evaluate(proj: &Projector, angles: &[Vec<Complex64>], tones: &[Vec<Complex64>], workers: usize) -> Vec<f64> {
    let nr = tones.len();
    let mut out = vec![0.0; angles.len() * nr];
    let run = |angles: &[Vec<Complex64>], out: &mut [f64]| {
        let mut b = Vec::with_capacity(proj.q * proj.l);
        for (s, o) in angles.iter().zip(out.chunks_exact_mut(nr)) {
            proj.eval(s, tones, &mut b, o);
        }
    };
    let workers = workers.min(angles.len()).max(1);
    if workers == 1 {
        run(angles, &mut out);
    } else {
        let per = angles.len().div_ceil(workers);
        std::thread::scope(|scope| {
            for (a, o) in angles.chunks(per).zip(out.chunks_mut(per * nr)) {
                scope.spawn(move || run(a, o));
            }
        });
    }
    out
}

struct Subspace {
    projector: Projector,
    regularized: bool,
}

fn subspace_of(flat: &[Complex64], l: usize, m: usize, params: &MusicParams) -> Result<Subspace> {
    let n = l * m;
    let mut cov = subspace::covariance_flat(flat, n);
    if !(cov.trace() > 0.0) {
        return Err(Error::NoTarget);
    }
    let regularized = params.force_regularization || cov.snapshot_count < n;
    if regularized {
        cov = cov.regularized(REGULARIZATION);
    }
    let e = noise_subspace(&cov, params.n_sources)?;
    Ok(Subspace { projector: Projector::new(&e, l, m), regularized })
}

fn check(cube: &DataCube, cfg: &RadarConfig, grid: &SweepGrid, params: &MusicParams) -> Result<()> {
    grid.validate(cfg)?;
    params.validate(cfg)?;
    cube.check_shape(cfg)?;
    if cube.chirps() < 2 {
        return Err(Error::input("clutter removal needs at least 2 chirps"));
    }
    Ok(())
}

fn tones(grid: &SweepGrid, l: usize, cfg: &RadarConfig) -> Vec<Vec<Complex64>> {
    grid.ranges.iter().map(|&r| steering::tone(r, l, cfg)).collect()
}

/// Rearranges `[angle][range]` into `[range][angle]`.
fn by_range(values: Vec<f64>, angles: usize, nr: usize) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for a in 0..angles {
        for r in 0..nr {
            out[r * angles + a] = values[a * nr + r];
        }
    }
    out
}

/// Range-azimuth spectrum over the 8-element aperture plus a separate
/// range-elevation spectrum from the vertical pairs (each pair is a
/// 2-element array; the four pairs are extra snapshots). Range and azimuth
/// come from the first, elevation from the second's own maximum.
pub fn locate_music_2d(
    cube: &DataCube,
    cfg: &RadarConfig,
    layout: &VirtualArrayLayout,
    grid: &SweepGrid,
    params: &MusicParams,
) -> Result<MusicOutput> {
    check(cube, cfg, grid, params)?;
    let l = params.fast_time_window;
    let tones = tones(grid, l, cfg);
    let nr = grid.ranges.len();

    let aperture = layout.azimuth_aperture();
    let az_sub = subspace_of(&snapshots(cube, &[&aperture], l, params.window_stride), l, 8, params)?;
    let az_steering = |a: f64| -> Vec<Complex64> {
        let u = internal_azimuth(a).sin();
        aperture.iter().map(|&v| Complex64::from_polar(1.0, layout.phase(v, u, 0.0))).collect()
    };
    let az_angles: Vec<Vec<Complex64>> = grid.azimuths_deg.iter().map(|&a| az_steering(a)).collect();
    let az_values = evaluate(&az_sub.projector, &az_angles, &tones, params.workers);

    let pairs: Vec<[usize; 2]> = layout.elevation_pairs.iter().map(|&(lo, hi)| [lo, hi]).collect();
    let groups: Vec<&[usize]> = pairs.iter().map(|p| p.as_slice()).collect();
    let el_sub = subspace_of(&snapshots(cube, &groups, l, params.window_stride), l, 2, params)?;
    let el_steering = |e: f64| {
        vec![Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, std::f64::consts::PI * e.to_radians().sin())]
    };
    let el_angles: Vec<Vec<Complex64>> = grid.elevations_deg.iter().map(|&e| el_steering(e)).collect();
    let el_values = evaluate(&el_sub.projector, &el_angles, &tones, params.workers);

    let az_spec = Pseudospectrum {
        ranges: grid.ranges.clone(),
        azimuths_deg: grid.azimuths_deg.clone(),
        elevations_deg: vec![0.0],
        values_db: by_range(az_values, az_angles.len(), nr),
    };
    let el_spec = Pseudospectrum {
        ranges: grid.ranges.clone(),
        azimuths_deg: vec![90.0],
        elevations_deg: grid.elevations_deg.clone(),
        values_db: by_range(el_values, el_angles.len(), nr),
    };
    let (ri, ai, _) = az_spec.argmax();
    let (rj, _, ei) = el_spec.argmax();
    let (mut range, mut az, mut el) = (grid.ranges[ri], grid.azimuths_deg[ai], grid.elevations_deg[ei]);
    if params.refine {
        let tone = |r: f64| steering::tone(r, l, cfg);
        [range, az] = refine::refine([&grid.ranges, &grid.azimuths_deg], [ri, ai], |[r, a]| {
            az_sub.projector.point(&az_steering(a), tone(r))
        });
        [_, el] = refine::refine([&grid.ranges, &grid.elevations_deg], [rj, ei], |[r, e]| {
            el_sub.projector.point(&el_steering(e), tone(r))
        });
    }
    let u = internal_azimuth(az).sin();
    let w = el.to_radians().sin();
    let (azimuth, elevation) = cosines_to_angles(u, w);
    let p = spherical_to_cartesian(range, azimuth, elevation);
    Ok(MusicOutput {
        estimate: PositionEstimate::new(p, cube.timestamp),
        regularized: az_sub.regularized || el_sub.regularized,
        spectra: vec![az_spec, el_spec],
    })
}

/// Joint spectrum over the full range x azimuth x elevation grid with all
/// 12 antennas; the estimate is the global maximum, refined between its
/// grid neighbours unless `params.refine` is off.
pub fn locate_music_3d(
    cube: &DataCube,
    cfg: &RadarConfig,
    layout: &VirtualArrayLayout,
    grid: &SweepGrid,
    params: &MusicParams,
) -> Result<MusicOutput> {
    check(cube, cfg, grid, params)?;
    let l = params.fast_time_window;
    let tones = tones(grid, l, cfg);
    let all: Vec<usize> = (0..NUM_VIRTUAL).collect();
    let sub = subspace_of(&snapshots(cube, &[&all], l, params.window_stride), l, NUM_VIRTUAL, params)?;
    let mut angles = Vec::with_capacity(grid.azimuths_deg.len() * grid.elevations_deg.len());
    for &a in &grid.azimuths_deg {
        for &e in &grid.elevations_deg {
            let p = GridPoint { range: grid.ranges[0], azimuth: internal_azimuth(a), elevation: e.to_radians() };
            angles.push(steering_vector(&p, cfg, layout, SteeringMode::AngleOnly)?);
        }
    }
    let values = evaluate(&sub.projector, &angles, &tones, params.workers);
    let spec = Pseudospectrum {
        ranges: grid.ranges.clone(),
        azimuths_deg: grid.azimuths_deg.clone(),
        elevations_deg: grid.elevations_deg.clone(),
        values_db: by_range(values, angles.len(), grid.ranges.len()),
    };
    let (ri, ai, ei) = spec.argmax();
    let mut x = [grid.ranges[ri], grid.azimuths_deg[ai], grid.elevations_deg[ei]];
    if params.refine {
        x = refine::refine([&grid.ranges, &grid.azimuths_deg, &grid.elevations_deg], [ri, ai, ei], |[r, a, e]| {
            let p = GridPoint { range: r, azimuth: internal_azimuth(a), elevation: e.to_radians() };
            match steering_vector(&p, cfg, layout, SteeringMode::AngleOnly) {
                Ok(s) => sub.projector.point(&s, steering::tone(r, l, cfg)),
                Err(_) => f64::NEG_INFINITY,
            }
        });
    }
    let p = spherical_to_cartesian(x[0], internal_azimuth(x[1]), x[2].to_radians());
    Ok(MusicOutput {
        estimate: PositionEstimate::new(p, cube.timestamp),
        regularized: sub.regularized,
        spectra: vec![spec],
    })
}
