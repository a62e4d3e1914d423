//! Static clutter removal: subtract the mean over chirps of every
//! (range bin, antenna) cell. Anything that does not change from chirp to
//! chirp lands exactly in that mean.

use num_complex::Complex64;

use crate::array::NUM_VIRTUAL;
use crate::cube::DataCube;
use crate::dsp::range::RangeProfiles;
use crate::error::{Error, Result};

fn subtract_chirp_mean(data: &mut [Complex64], chirps: usize) -> Result<()> {
    if chirps < 2 {
        return Err(Error::input("clutter removal needs at least 2 chirps"));
    }
    let stride = data.len() / chirps;
    let mut mean = vec![Complex64::default(); stride];
    for chirp in data.chunks_exact(stride) {
        for (m, x) in mean.iter_mut().zip(chirp) {
            *m += x;
        }
    }
    let scale = 1.0 / chirps as f64;
    for m in &mut mean {
        *m *= scale;
    }
    for chirp in data.chunks_exact_mut(stride) {
        for (x, m) in chirp.iter_mut().zip(&mean) {
            *x -= m;
        }
    }
    Ok(())
}

pub fn clutter_removal(profiles: &RangeProfiles) -> Result<RangeProfiles> {
    let mut out = profiles.clone();
    remove_clutter_in_place(&mut out)?;
    Ok(out)
}

pub fn remove_clutter_in_place(profiles: &mut RangeProfiles) -> Result<()> {
    let chirps = profiles.chirps();
    subtract_chirp_mean(profiles.as_mut_slice(), chirps)
}

/// The same operation on raw samples. Windowing and the range FFT are
/// linear per sample, so this commutes with [`crate::dsp::range_fft`].
pub fn remove_cube_clutter(cube: &mut DataCube) -> Result<()> {
    let chirps = cube.chirps();
    debug_assert_eq!(cube.as_slice().len() % (chirps.max(1) * NUM_VIRTUAL), 0);
    subtract_chirp_mean(cube.as_mut_slice(), chirps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::VirtualArrayLayout;
    use crate::dsp::range::{range_fft, RANGE_FFT_SIZE};
    use crate::model::RadarConfig;
    use crate::sim::{synthesize_frame, PointTarget, Scene};

    #[test]
    fn constant_chirps_vanish() {
        let data: Vec<Complex64> =
            (0..4 * 3 * NUM_VIRTUAL).map(|i| Complex64::new((i % 36) as f64, -((i % 36) as f64) * 0.5)).collect();
        let p = RangeProfiles::new(4, 3, data).unwrap();
        let out = clutter_removal(&p).unwrap();
        assert!(out.as_slice().iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn single_chirp_rejected() {
        let p = RangeProfiles::new(1, 2, vec![Complex64::default(); 2 * NUM_VIRTUAL]).unwrap();
        assert!(clutter_removal(&p).is_err());
    }

    #[test]
    fn commutes_with_range_fft() {
        let cfg = RadarConfig::default();
        let scene = Scene::points(
            vec![
                PointTarget::fixed([0.3, 2.0, 0.1], 1.0),
                PointTarget { position: [-0.2, 3.0, 0.0], velocity: [0.0, 1.5, 0.0], amplitude: 1.0 },
            ],
            1,
            &cfg,
        );
        let mut cube = synthesize_frame(&scene, &cfg, &VirtualArrayLayout::default(), 0).unwrap().cube;
        let a = clutter_removal(&range_fft(&cube, RANGE_FFT_SIZE).unwrap()).unwrap();
        remove_cube_clutter(&mut cube).unwrap();
        let b = range_fft(&cube, RANGE_FFT_SIZE).unwrap();
        let scale = a.as_slice().iter().map(|x| x.norm()).fold(0.0, f64::max);
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).norm() < 1e-9 * scale);
        }
    }
}
