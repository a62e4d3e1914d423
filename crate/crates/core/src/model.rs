//! Radar configuration and the closed-form FMCW relations shared by every
//! pipeline: beat frequency to range, chirp-to-chirp phase to radial
//! velocity, and inter-element phase to angle of arrival.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Chirp, frame and sampling parameters of the sensor.
///
/// The wavelength is derived from the carrier and never stored.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RadarConfig {
    /// Hz
    pub carrier_freq: f64,
    /// Hz/s
    pub chirp_slope: f64,
    /// Hz
    pub adc_sample_rate: f64,
    pub samples_per_chirp: usize,
    pub chirps_per_frame: usize,
    /// s
    pub chirp_period: f64,
    /// s
    pub frame_period: f64,
}

impl Default for RadarConfig {
    /// 60 GHz carrier, 60 MHz/us slope, 5 Msps, 256 samples x 128 chirps,
    /// 60 us chirps, 10 Hz frames.
    fn default() -> Self {
        Self {
            carrier_freq: 60.0e9,
            chirp_slope: 60.0e12,
            adc_sample_rate: 5.0e6,
            samples_per_chirp: 256,
            chirps_per_frame: 128,
            chirp_period: 60.0e-6,
            frame_period: 0.1,
        }
    }
}

/// Resolutions and limits implied by a [`RadarConfig`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DerivedParams {
    pub range_resolution: f64,
    pub max_range: f64,
    pub velocity_resolution: f64,
    pub max_unambiguous_velocity: f64,
    pub wavelength: f64,
    pub bandwidth: f64,
}

const CONFIG_KEYS: [&str; 7] = [
    "carrier_freq",
    "chirp_slope",
    "adc_sample_rate",
    "samples_per_chirp",
    "chirps_per_frame",
    "chirp_period",
    "frame_period",
];

impl RadarConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// Samples in one frame's data cube, counting all 12 virtual antennas.
    pub fn cube_len(&self) -> usize {
        self.chirps_per_frame * self.samples_per_chirp * crate::array::NUM_VIRTUAL
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_freq", self.carrier_freq),
            ("chirp_slope", self.chirp_slope),
            ("adc_sample_rate", self.adc_sample_rate),
            ("chirp_period", self.chirp_period),
            ("frame_period", self.frame_period),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.samples_per_chirp < 2 {
            return Err(Error::config("samples_per_chirp must be at least 2"));
        }
        if self.chirps_per_frame == 0 {
            return Err(Error::config("chirps_per_frame must be positive"));
        }
        let sampling_time = self.samples_per_chirp as f64 / self.adc_sample_rate;
        if self.chirp_period < sampling_time * (1.0 - 1e-12) {
            return Err(Error::config(format!(
                "chirp_period {} s is shorter than the sampling window {} s",
                self.chirp_period, sampling_time
            )));
        }
        let active = self.chirps_per_frame as f64 * self.chirp_period;
        if self.frame_period < active * (1.0 - 1e-12) {
            return Err(Error::config(format!(
                "frame_period {} s is shorter than the chirp train {} s",
                self.frame_period, active
            )));
        }
        Ok(())
    }

    pub fn derived(&self) -> DerivedParams {
        derived_params(self)
    }

    /// Flat `key = value` text, one key per line, SI units.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "carrier_freq = {}", self.carrier_freq);
        let _ = writeln!(out, "chirp_slope = {}", self.chirp_slope);
        let _ = writeln!(out, "adc_sample_rate = {}", self.adc_sample_rate);
        let _ = writeln!(out, "samples_per_chirp = {}", self.samples_per_chirp);
        let _ = writeln!(out, "chirps_per_frame = {}", self.chirps_per_frame);
        let _ = writeln!(out, "chirp_period = {}", self.chirp_period);
        let _ = writeln!(out, "frame_period = {}", self.frame_period);
        out
    }

    /// Parses a config file. Keys not belonging to the radar config are
    /// rejected; use [`KeyValues`] directly for files that carry extras.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut kv = KeyValues::parse(text, "<config>")?;
        let cfg = Self::take_from(&mut kv)?;
        if let Some((key, _)) = kv.entries.iter().next() {
            return Err(Error::config(format!("unknown config key `{key}`")));
        }
        Ok(cfg)
    }

    /// Removes the radar keys from `kv` and builds a validated config.
    pub fn take_from(kv: &mut KeyValues) -> Result<Self> {
        let cfg = Self {
            carrier_freq: kv.take_f64("carrier_freq")?,
            chirp_slope: kv.take_f64("chirp_slope")?,
            adc_sample_rate: kv.take_f64("adc_sample_rate")?,
            samples_per_chirp: kv.take_usize("samples_per_chirp")?,
            chirps_per_frame: kv.take_usize("chirps_per_frame")?,
            chirp_period: kv.take_f64("chirp_period")?,
            frame_period: kv.take_f64("frame_period")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut kv = KeyValues::parse(&text, &path.display().to_string())?;
        let cfg = Self::take_from(&mut kv)?;
        if let Some((key, _)) = kv.entries.iter().next() {
            return Err(Error::config(format!("{}: unknown config key `{key}`", path.display())));
        }
        Ok(cfg)
    }

    /// First 8 bytes of the SHA-256 of the canonical text form.
    pub fn digest(&self) -> [u8; 8] {
        let hash = Sha256::digest(self.to_kv_string().as_bytes());
        let mut out = [0u8; 8];
        out.copy_from_slice(&hash[..8]);
        out
    }

    pub fn is_config_key(key: &str) -> bool {
        CONFIG_KEYS.contains(&key)
    }
}

/// Parsed `key = value` lines. `#` starts a comment.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Text {
                    path: origin.to_string(),
                    line: i + 1,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = k.trim().to_string();
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Text {
                    path: origin.to_string(),
                    line: i + 1,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn take_f64(&mut self, key: &str) -> Result<f64> {
        let v = self.take(key).ok_or_else(|| Error::config(format!("missing key `{key}`")))?;
        v.parse().map_err(|_| Error::config(format!("`{key}`: `{v}` is not a number")))
    }

    pub fn take_usize(&mut self, key: &str) -> Result<usize> {
        let v = self.take(key).ok_or_else(|| Error::config(format!("missing key `{key}`")))?;
        v.parse().map_err(|_| Error::config(format!("`{key}`: `{v}` is not a count")))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Range of a beat-frequency component: `f_if * c / (2 S)`.
pub fn freq_to_range(f_if: f64, cfg: &RadarConfig) -> Result<f64> {
    if f_if.is_nan() || f_if < 0.0 {
        return Err(Error::Domain(format!("beat frequency must be non-negative, got {f_if}")));
    }
    Ok(f_if * SPEED_OF_LIGHT / (2.0 * cfg.chirp_slope))
}

/// Inverse of [`freq_to_range`].
pub fn range_to_beat_freq(range: f64, cfg: &RadarConfig) -> f64 {
    2.0 * cfg.chirp_slope * range / SPEED_OF_LIGHT
}

/// Radial velocity from the phase step between consecutive chirps,
/// `lambda * dphi / (4 pi Tc)`. Positive means receding.
pub fn phase_to_velocity(delta_phi: f64, cfg: &RadarConfig) -> Result<f64> {
    if delta_phi.is_nan() || delta_phi.abs() > PI {
        return Err(Error::Domain(format!("chirp phase step {delta_phi} rad is outside [-pi, pi]; wrap it first")));
    }
    Ok(cfg.wavelength() * delta_phi / (4.0 * PI * cfg.chirp_period))
}

/// Angle of arrival from the phase difference `omega` between two elements
/// `spacing` metres apart: `asin(lambda omega / (2 pi d))`. Zero is boresight.
pub fn phase_to_angle(omega: f64, spacing: f64, cfg: &RadarConfig) -> Result<f64> {
    if !(spacing > 0.0) {
        return Err(Error::Domain(format!("element spacing must be positive, got {spacing}")));
    }
    let s = cfg.wavelength() * omega / (2.0 * PI * spacing);
    // Tolerate rounding at the endfire limit.
    if s.is_nan() || s.abs() > 1.0 + 1e-12 {
        return Err(Error::OutsideVisibleRegion(format!("phase {omega} rad over {spacing} m maps to sine {s}")));
    }
    Ok(s.clamp(-1.0, 1.0).asin())
}

pub fn derived_params(cfg: &RadarConfig) -> DerivedParams {
    let wavelength = cfg.wavelength();
    let bandwidth = cfg.chirp_slope * cfg.samples_per_chirp as f64 / cfg.adc_sample_rate;
    DerivedParams {
        range_resolution: SPEED_OF_LIGHT / (2.0 * bandwidth),
        max_range: cfg.adc_sample_rate / 2.0 * SPEED_OF_LIGHT / (2.0 * cfg.chirp_slope),
        velocity_resolution: wavelength / (2.0 * cfg.chirps_per_frame as f64 * cfg.chirp_period),
        max_unambiguous_velocity: wavelength / (4.0 * cfg.chirp_period),
        wavelength,
        bandwidth,
    }
}
