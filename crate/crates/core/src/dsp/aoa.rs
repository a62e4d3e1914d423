use num_complex::Complex64;

use crate::array::{VirtualArrayLayout, NUM_VIRTUAL};
use crate::dsp::sine_dft::{column_sine, SineDft};
use crate::error::{Error, Result};
use crate::geometry::cosines_to_angles;
use crate::model::{phase_to_angle, RadarConfig};

pub const ANGLE_FFT_SIZE: usize = 180;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleEstimate {
    /// rad, boresight zero, positive towards +x.
    pub azimuth: f64,
    /// rad, positive towards +z.
    pub elevation: f64,
    /// Direction cosine along x from the azimuth spectrum peak.
    pub u: f64,
    /// Direction cosine along z from the elevation pairs.
    pub w: f64,
}

/// Angle of arrival from the 12 antenna values of one cell.
///
/// The azimuth aperture (both rows, ordered by x) goes through an
/// `nfft`-point angle FFT whose peak gives `u`; the elevation pairs give
/// `w` from their averaged phase difference. Both phases map through the
/// angle equation; the returned azimuth accounts for elevation so that
/// `(range, azimuth, elevation)` reproduces the direction exactly.
pub fn aoa_fft(
    snapshot: &[Complex64; NUM_VIRTUAL],
    layout: &VirtualArrayLayout,
    cfg: &RadarConfig,
    nfft: usize,
) -> Result<AngleEstimate> {
    let dft = SineDft::new(8, nfft);
    aoa_with(snapshot, layout, cfg, &dft)
}

pub(crate) fn aoa_with(
    snapshot: &[Complex64; NUM_VIRTUAL],
    layout: &VirtualArrayLayout,
    cfg: &RadarConfig,
    dft: &SineDft,
) -> Result<AngleEstimate> {
    if snapshot.iter().all(|x| x.norm_sqr() == 0.0) {
        return Err(Error::UndefinedAngle);
    }
    let aperture = layout.azimuth_aperture();
    let taps: [Complex64; 8] = std::array::from_fn(|i| snapshot[aperture[i]]);
    let n = dft.columns();
    let mut mags = vec![0.0; n];
    dft.magnitudes(&taps, &mut mags);
    let mut best = 0;
    for k in 1..n {
        if mags[k] > mags[best] {
            best = k;
        }
    }
    let spacing = VirtualArrayLayout::spacing(cfg.wavelength());
    let omega = std::f64::consts::PI * column_sine(best, n);
    let u = phase_to_angle(omega, spacing, cfg)?.sin();

    let pair_sum: Complex64 = layout.elevation_pairs.iter().map(|&(lo, hi)| snapshot[hi] * snapshot[lo].conj()).sum();
    let w = if pair_sum.norm_sqr() == 0.0 { 0.0 } else { phase_to_angle(pair_sum.arg(), spacing, cfg)?.sin() };
    let (azimuth, elevation) = cosines_to_angles(u, w);
    Ok(AngleEstimate { azimuth, elevation, u, w })
}
