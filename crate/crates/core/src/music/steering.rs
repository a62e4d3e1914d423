use std::f64::consts::PI;

use num_complex::Complex64;

use crate::array::VirtualArrayLayout;
use crate::error::{Error, Result};
use crate::model::{range_to_beat_freq, RadarConfig};

/// A sweep point: range in m, boresight-zero azimuth and elevation in rad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub range: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

impl GridPoint {
    /// Direction cosines `(u, w)` of the point's direction.
    pub fn cosines(&self) -> (f64, f64) {
        (self.elevation.cos() * self.azimuth.sin(), self.elevation.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteeringMode {
    /// The 12 antenna phases only.
    AngleOnly,
    /// Fast-time tone over `samples` samples, Kronecker with the antenna
    /// phases; entries are ordered sample-major like a data cube.
    JointRange { samples: usize },
}

/// Per-sample phase step of the beat tone at `range`, rad.
pub(crate) fn beat_step(range: f64, cfg: &RadarConfig) -> f64 {
    2.0 * PI * range_to_beat_freq(range, cfg) / cfg.adc_sample_rate
}

pub(crate) fn tone(range: f64, samples: usize, cfg: &RadarConfig) -> Vec<Complex64> {
    let step = beat_step(range, cfg);
    (0..samples).map(|m| Complex64::from_polar(1.0, step * m as f64)).collect()
}

pub fn steering_vector(
    point: &GridPoint,
    cfg: &RadarConfig,
    layout: &VirtualArrayLayout,
    mode: SteeringMode,
) -> Result<Vec<Complex64>> {
    let half_pi = PI / 2.0;
    if !(point.azimuth.abs() <= half_pi && point.elevation.abs() <= half_pi) {
        return Err(Error::OutsideVisibleRegion(format!(
            "azimuth {} rad, elevation {} rad",
            point.azimuth, point.elevation
        )));
    }
    let (u, w) = point.cosines();
    let spatial = layout.steering(u, w);
    match mode {
        SteeringMode::AngleOnly => Ok(spatial.to_vec()),
        SteeringMode::JointRange { samples } => {
            let max_range = cfg.derived().max_range;
            if !(point.range > 0.0 && point.range < max_range) {
                return Err(Error::OutsideVisibleRegion(format!("range {} m outside (0, {max_range}) m", point.range)));
            }
            let t = tone(point.range, samples, cfg);
            Ok(t.iter().flat_map(|tm| spatial.iter().map(move |s| tm * s)).collect::<Vec<_>>())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> VirtualArrayLayout {
        VirtualArrayLayout::default()
    }

    #[test]
    fn boresight_angle_only() {
        let cfg = RadarConfig::default();
        let p = GridPoint { range: 2.0, azimuth: 0.0, elevation: 0.0 };
        let a = steering_vector(&p, &cfg, &layout(), SteeringMode::AngleOnly).unwrap();
        assert_eq!(a.len(), 12);
        assert!(a.iter().all(|x| (x - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn unit_modulus_entries() {
        let cfg = RadarConfig::default();
        let p = GridPoint { range: 3.1, azimuth: 0.4, elevation: -0.2 };
        let a = steering_vector(&p, &cfg, &layout(), SteeringMode::JointRange { samples: 16 }).unwrap();
        assert_eq!(a.len(), 16 * 12);
        let norm2: f64 = a.iter().map(|x| x.norm_sqr()).sum();
        assert!((norm2.sqrt() - (a.len() as f64).sqrt()).abs() < 1e-12);
        assert!(a.iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn fast_time_frequency() {
        let cfg = RadarConfig::default();
        let r = 2.35;
        let p = GridPoint { range: r, azimuth: 0.0, elevation: 0.0 };
        let a = steering_vector(&p, &cfg, &layout(), SteeringMode::JointRange { samples: 8 }).unwrap();
        let cycles = 2.0 * cfg.chirp_slope * r / (crate::model::SPEED_OF_LIGHT * cfg.adc_sample_rate);
        // Antenna 0 across samples, stepping by 12.
        for m in 1..8 {
            let step = (a[m * 12] * a[(m - 1) * 12].conj()).arg();
            assert!((step - 2.0 * PI * cycles).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_region() {
        let cfg = RadarConfig::default();
        let bad = GridPoint { range: 2.0, azimuth: 2.0, elevation: 0.0 };
        assert!(steering_vector(&bad, &cfg, &layout(), SteeringMode::AngleOnly).is_err());
        let far = GridPoint { range: 7.0, azimuth: 0.0, elevation: 0.0 };
        assert!(steering_vector(&far, &cfg, &layout(), SteeringMode::JointRange { samples: 4 }).is_err());
    }
}
