use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::array::NUM_VIRTUAL;
use crate::dsp::range::RangeProfiles;
use crate::error::{Error, Result};
use crate::model::{freq_to_range, RadarConfig};

/// Range-Doppler magnitudes plus the per-antenna complex cells they were
/// built from. Doppler bins are fftshifted: bin `doppler_bins / 2` is zero
/// velocity and higher bins recede.
#[derive(Debug, Clone)]
pub struct RangeDopplerMap {
    doppler_bins: usize,
    range_bins: usize,
    /// `[doppler][range]`, summed over antennas.
    values: Vec<f64>,
    /// `[doppler][range][va]`; empty for maps built from bare values.
    cells: Vec<Complex64>,
}

impl RangeDopplerMap {
    /// A map without antenna data, e.g. for exercising CFAR directly.
    pub fn from_values(doppler_bins: usize, range_bins: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != doppler_bins * range_bins {
            return Err(Error::input("map size does not match its dimensions"));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::input("map values must be non-negative"));
        }
        Ok(Self { doppler_bins, range_bins, values, cells: Vec::new() })
    }

    pub fn doppler_bins(&self) -> usize {
        self.doppler_bins
    }

    pub fn range_bins(&self) -> usize {
        self.range_bins
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, doppler: usize, range: usize) -> f64 {
        self.values[doppler * self.range_bins + range]
    }

    /// The 12 antenna values at one cell, if the map carries them.
    pub fn snapshot(&self, doppler: usize, range: usize) -> Option<[Complex64; NUM_VIRTUAL]> {
        if self.cells.is_empty() {
            return None;
        }
        let at = (doppler * self.range_bins + range) * NUM_VIRTUAL;
        Some(std::array::from_fn(|v| self.cells[at + v]))
    }

    pub fn zero_doppler_bin(&self) -> usize {
        self.doppler_bins / 2
    }

    /// Radial velocity at the centre of a (shifted) Doppler bin, m/s.
    pub fn bin_velocity(&self, doppler: usize, cfg: &RadarConfig) -> f64 {
        (doppler as f64 - self.zero_doppler_bin() as f64) * cfg.derived().velocity_resolution
    }

    /// Range at the centre of a range bin, m.
    pub fn bin_range(&self, range: usize, cfg: &RadarConfig) -> f64 {
        bin_to_range(range, self.range_bins, cfg)
    }
}

pub(crate) fn bin_to_range(bin: usize, nfft: usize, cfg: &RadarConfig) -> f64 {
    freq_to_range(bin as f64 * cfg.adc_sample_rate / nfft as f64, cfg).expect("bin frequencies are non-negative")
}

/// FFT along the chirp axis of every range bin and antenna, shifted so zero
/// velocity sits in the middle. No window: the chirp train is short and the
/// point-cloud stage prefers the narrower main lobe.
pub fn doppler_fft(profiles: &RangeProfiles) -> RangeDopplerMap {
    let nc = profiles.chirps();
    let nr = profiles.bins();
    let fft = FftPlanner::new().plan_fft_forward(nc);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let half = nc / 2;
    let mut cells = vec![Complex64::default(); nc * nr * NUM_VIRTUAL];
    let mut values = vec![0.0; nc * nr];
    // One range bin at a time: its 12 chirp sequences, laid out [va][chirp],
    // stay cache resident through gather, transform and scatter.
    let mut buf = vec![Complex64::default(); NUM_VIRTUAL * nc];
    for bin in 0..nr {
        for c in 0..nc {
            let cell = &profiles.chirp(c)[bin * NUM_VIRTUAL..(bin + 1) * NUM_VIRTUAL];
            for (va, x) in cell.iter().enumerate() {
                buf[va * nc + c] = *x;
            }
        }
        if nc > 0 {
            fft.process_with_scratch(&mut buf, &mut scratch);
        }
        for k in 0..nc {
            let d = (k + half) % nc;
            let at = (d * nr + bin) * NUM_VIRTUAL;
            let mut sum = 0.0;
            for va in 0..NUM_VIRTUAL {
                let x = buf[va * nc + k];
                cells[at + va] = x;
                sum += x.norm_sqr().sqrt();
            }
            values[d * nr + bin] = sum;
        }
    }
    RangeDopplerMap { doppler_bins: nc, range_bins: nr, values, cells }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::VirtualArrayLayout;
    use crate::dsp::clutter::clutter_removal;
    use crate::dsp::range::{range_fft, RANGE_FFT_SIZE};
    use crate::sim::{synthesize_frame, PointTarget, Scene};

    fn map_of(targets: Vec<PointTarget>, remove: bool) -> RangeDopplerMap {
        map_with(&RadarConfig::default(), targets, remove)
    }

    fn map_with(cfg: &RadarConfig, targets: Vec<PointTarget>, remove: bool) -> RangeDopplerMap {
        let cfg = *cfg;
        let scene = Scene::points(targets, 1, &cfg);
        let cube = synthesize_frame(&scene, &cfg, &VirtualArrayLayout::default(), 0).unwrap().cube;
        let mut p = range_fft(&cube, RANGE_FFT_SIZE).unwrap();
        if remove {
            p = clutter_removal(&p).unwrap();
        }
        doppler_fft(&p)
    }

    fn peak(map: &RangeDopplerMap) -> (usize, usize) {
        let i =
            map.values().iter().enumerate().fold((0, -1.0), |best, (i, &v)| if v > best.1 { (i, v) } else { best }).0;
        (i / map.range_bins(), i % map.range_bins())
    }

    #[test]
    fn two_bins_above_centre() {
        let cfg = RadarConfig::default();
        let v = 2.0 * cfg.derived().velocity_resolution;
        let map =
            map_of(vec![PointTarget { position: [0.0, 2.0, 0.0], velocity: [0.0, v, 0.0], amplitude: 1.0 }], false);
        assert_eq!(peak(&map).0, map.zero_doppler_bin() + 2);
        assert!((map.bin_velocity(peak(&map).0, &cfg) - v).abs() < 1e-12);
    }

    #[test]
    fn static_scene_sits_at_zero_doppler() {
        let map = map_of(vec![PointTarget::fixed([0.4, 2.5, -0.2], 1.0)], false);
        let (d, r) = peak(&map);
        assert_eq!(d, 64);
        // Every other Doppler bin at that range holds essentially nothing.
        for k in 0..128 {
            if k != 64 {
                assert!(map.value(k, r) < 1e-9 * map.value(64, r));
            }
        }
    }

    #[test]
    fn fast_target_aliases() {
        // A short frame keeps range migration well inside one bin.
        let cfg = RadarConfig { chirps_per_frame: 16, ..RadarConfig::default() };
        let d = cfg.derived();
        // 10 bins above zero wraps to 10 - 16 = -6.
        let v = 10.0 * d.velocity_resolution;
        assert!(v > d.max_unambiguous_velocity);
        let target = PointTarget { position: [0.0, 2.0, 0.0], velocity: [0.0, v, 0.0], amplitude: 1.0 };
        let map = map_with(&cfg, vec![target], false);
        assert_eq!(peak(&map).0 as i64, 8 + 10 - 16);
    }

    #[test]
    fn clutter_removal_oracle() {
        let cfg = RadarConfig::default();
        let vres = cfg.derived().velocity_resolution;
        let static_t = PointTarget::fixed([0.5, 2.0, 0.0], 1.0);
        let moving = PointTarget { position: [-0.4, 3.2, 0.1], velocity: [0.0, 5.0 * vres, 0.0], amplitude: 1.0 };
        let raw = map_of(vec![static_t, moving], false);
        let clean = map_of(vec![static_t, moving], true);
        let s = bin_of(&raw, static_t.position, &cfg);
        let m = (64 + 5, bin_of(&raw, moving.position, &cfg).1);
        let suppression = 20.0 * (raw.value(s.0, s.1) / clean.value(s.0, s.1)).log10();
        assert!(suppression >= 40.0, "{suppression}");
        let change = 20.0 * (clean.value(m.0, m.1) / raw.value(m.0, m.1)).log10();
        assert!(change.abs() < 1.0, "{change}");
    }

    fn bin_of(map: &RangeDopplerMap, p: [f64; 3], cfg: &RadarConfig) -> (usize, usize) {
        let r = crate::geometry::norm(p);
        let bin = (r / cfg.derived().range_resolution).round() as usize;
        // Strongest Doppler bin at the nearest range bin.
        let d = (0..map.doppler_bins()).max_by(|&a, &b| map.value(a, bin).total_cmp(&map.value(b, bin))).unwrap();
        (d, bin)
    }

    #[test]
    fn from_values_validates() {
        assert!(RangeDopplerMap::from_values(2, 2, vec![0.0; 3]).is_err());
        assert!(RangeDopplerMap::from_values(1, 2, vec![0.0, -1.0]).is_err());
        let m = RangeDopplerMap::from_values(1, 2, vec![0.0, 1.0]).unwrap();
        assert!(m.snapshot(0, 0).is_none());
    }
}
