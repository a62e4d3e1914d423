//! Ideal dechirped IF model: every point scatterer contributes one complex
//! tone per chirp and virtual antenna.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::array::{VirtualArrayLayout, NUM_VIRTUAL};
use crate::cube::DataCube;
use crate::dsp::range::hann_window;
use crate::error::{Error, Result};
use crate::geometry::{direction_cosines, norm};
use crate::model::{range_to_beat_freq, RadarConfig};
use crate::sim::drone::{scatterers_at, DroneModel, DronePose};
use crate::sim::trajectory::Trajectory;

/// A stationary reflector such as a wall or furniture.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StaticReflector {
    pub position: [f64; 3],
    pub amplitude: f64,
}

/// A delayed copy of the drone body return.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MultipathGhost {
    /// Extra path length, m.
    pub delay_offset: f64,
    pub relative_amplitude: f64,
}

/// A point moving at constant velocity, `position + velocity * t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTarget {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub amplitude: f64,
}

impl PointTarget {
    pub fn fixed(position: [f64; 3], amplitude: f64) -> Self {
        Self { position, velocity: [0.0; 3], amplitude }
    }

    pub fn at(&self, t: f64) -> [f64; 3] {
        std::array::from_fn(|k| self.position[k] + self.velocity[k] * t)
    }
}

/// Everything the radar sees. Amplitudes are referenced to 1 m and fall
/// off as 1/r^2 (two-way spreading of the field amplitude).
#[derive(Debug, Clone)]
pub struct Scene {
    pub drone: Option<DroneModel>,
    pub trajectory: Trajectory,
    pub static_clutter: Vec<StaticReflector>,
    /// Extra scatterers outside the drone model, for constructed scenes.
    pub targets: Vec<PointTarget>,
    /// Std of the complex white noise per sample (E|n|^2 = noise_std^2).
    pub noise_std: f64,
    pub multipath_ghosts: Vec<MultipathGhost>,
    pub noise_seed: u64,
    /// Time of frame 0, s.
    pub start_time: f64,
}

impl Scene {
    /// Noise-free scene with only the given point targets.
    pub fn points(targets: Vec<PointTarget>, frames: usize, cfg: &RadarConfig) -> Self {
        let rate = 1.0 / cfg.frame_period;
        Self {
            drone: None,
            trajectory: Trajectory::hover([0.0, 2.0, 0.0], frames.max(1) as f64 / rate, rate),
            static_clutter: Vec::new(),
            targets,
            noise_std: 0.0,
            multipath_ghosts: Vec::new(),
            noise_seed: 0,
            start_time: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = &self.drone {
            d.validate()?;
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::config("noise_std must be non-negative"));
        }
        let amps = self
            .static_clutter
            .iter()
            .map(|c| c.amplitude)
            .chain(self.targets.iter().map(|t| t.amplitude))
            .chain(self.multipath_ghosts.iter().map(|g| g.relative_amplitude));
        for a in amps {
            if !(a >= 0.0) {
                return Err(Error::config("amplitudes must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn scatterer_count(&self) -> usize {
        let drone = self.drone.as_ref().map_or(0, |d| d.scatterer_count() + self.multipath_ghosts.len());
        drone + self.static_clutter.len() + self.targets.len()
    }

    pub fn frame_time(&self, frame_index: u64, cfg: &RadarConfig) -> f64 {
        self.start_time + frame_index as f64 * cfg.frame_period
    }

    /// Ground-truth drone body position for a frame (at the first chirp).
    pub fn ground_truth(&self, frame_index: u64, cfg: &RadarConfig) -> Result<[f64; 3]> {
        let t = frame_index as f64 * cfg.frame_period;
        Ok(self.trajectory.pose_at(t)?.position)
    }

    /// (position, amplitude at 1 m) of every scatterer at scene time `t`.
    fn sources_at(&self, t: f64, out: &mut Vec<([f64; 3], f64)>) -> Result<()> {
        out.clear();
        if let Some(drone) = &self.drone {
            let pose: DronePose = self.trajectory.pose_at(t)?;
            let scatterers = scatterers_at(drone, &pose, t);
            out.extend(scatterers.iter().map(|s| (s.position, s.amplitude)));
            let body = scatterers[0];
            let r = norm(body.position);
            for g in &self.multipath_ghosts {
                let scale = if r > 0.0 { (r + g.delay_offset) / r } else { 1.0 };
                out.push((body.position.map(|c| c * scale), body.amplitude * g.relative_amplitude));
            }
        }
        out.extend(self.static_clutter.iter().map(|c| (c.position, c.amplitude)));
        out.extend(self.targets.iter().map(|p| (p.at(t), p.amplitude)));
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthFrame {
    pub cube: DataCube,
    /// Scatterers beyond the unambiguous range, left out of this frame.
    pub dropped_scatterers: usize,
}

/// Adds the IF tone of one scatterer to a chirp buffer laid out `[sample][va]`.
pub(crate) fn add_point(
    chirp: &mut [Complex64],
    position: [f64; 3],
    amplitude: f64,
    cfg: &RadarConfig,
    layout: &VirtualArrayLayout,
) {
    let r = norm(position);
    if r == 0.0 || amplitude == 0.0 {
        return;
    }
    let (u, w) = direction_cosines(position);
    let gain = amplitude / (r * r);
    let carrier_phase = 4.0 * PI * r / cfg.wavelength();
    let coefs: [Complex64; NUM_VIRTUAL] =
        std::array::from_fn(|i| Complex64::from_polar(gain, carrier_phase + layout.phase(i, u, w)));
    let step = 2.0 * PI * range_to_beat_freq(r, cfg) / cfg.adc_sample_rate;
    // Phasor recurrence, re-anchored every 64 samples to bound drift.
    let rot = Complex64::from_polar(1.0, step);
    let mut tone = Complex64::new(1.0, 0.0);
    for (m, cell) in chirp.chunks_exact_mut(NUM_VIRTUAL).enumerate() {
        if m % 64 == 0 {
            tone = Complex64::from_polar(1.0, step * m as f64);
        }
        for (x, c) in cell.iter_mut().zip(&coefs) {
            *x += c * tone;
        }
        tone *= rot;
    }
}

fn frame_rng(seed: u64, frame_index: u64) -> ChaCha8Rng {
    let mut z = seed ^ frame_index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Adds complex white noise with `E|n|^2 = std^2` to every sample.
pub fn add_noise(cube: &mut DataCube, std: f64, seed: u64) {
    if std == 0.0 {
        return;
    }
    let mut rng = frame_rng(seed, cube.frame_index);
    let s = std / 2f64.sqrt();
    for x in cube.as_mut_slice() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *x += Complex64::new(re * s, im * s);
    }
}

/// Renders one frame. Scatterer positions are re-evaluated at every chirp
/// start, so radial motion shows up as a chirp-to-chirp phase step of
/// `4 pi v Tc / lambda` and rotating blade tips produce micro-Doppler.
pub fn synthesize_frame(
    scene: &Scene,
    cfg: &RadarConfig,
    layout: &VirtualArrayLayout,
    frame_index: u64,
) -> Result<SynthFrame> {
    let t0 = frame_index as f64 * cfg.frame_period;
    let mut cube = DataCube::zeros(cfg, frame_index, scene.start_time + t0);
    let max_range = cfg.derived().max_range;

    let mut sources = Vec::new();
    scene.sources_at(t0, &mut sources)?;
    let keep: Vec<bool> = sources.iter().map(|(p, _)| norm(*p) < max_range).collect();
    let dropped_scatterers = keep.iter().filter(|k| !**k).count();
    if dropped_scatterers > 0 {
        log::warn!("frame {frame_index}: {dropped_scatterers} scatterer(s) beyond {max_range:.2} m dropped");
    }

    for n in 0..cfg.chirps_per_frame {
        let t = t0 + n as f64 * cfg.chirp_period;
        if n > 0 {
            scene.sources_at(t, &mut sources)?;
        }
        let chirp = cube.chirp_mut(n);
        for ((position, amplitude), keep) in sources.iter().zip(&keep) {
            if *keep {
                add_point(chirp, *position, *amplitude, cfg, layout);
            }
        }
    }
    add_noise(&mut cube, scene.noise_std, scene.noise_seed);
    Ok(SynthFrame { cube, dropped_scatterers })
}

/// Per-sample noise std giving `snr_db` for a tone of per-sample amplitude
/// `amplitude` in one Hann-windowed range bin of one chirp and antenna.
pub fn noise_std_for_snr(amplitude: f64, snr_db: f64, samples_per_chirp: usize) -> f64 {
    let w = hann_window(samples_per_chirp);
    let coherent: f64 = w.iter().sum();
    let energy: f64 = w.iter().map(|x| x * x).sum();
    let gain = coherent * coherent / energy;
    amplitude * (gain / 10f64.powf(snr_db / 10.0)).sqrt()
}
