use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::array::NUM_VIRTUAL;
use crate::cube::DataCube;
use crate::error::{Error, Result};

pub const RANGE_FFT_SIZE: usize = 256;

/// Symmetric Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let m = (n - 1) as f64;
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / m).cos()).collect()
}

/// Complex range profiles laid out `[chirp][bin][va]`, the same order as
/// a [`DataCube`] with samples replaced by range bins.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeProfiles {
    chirps: usize,
    bins: usize,
    data: Vec<Complex64>,
}

impl RangeProfiles {
    pub fn new(chirps: usize, bins: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != chirps * bins * NUM_VIRTUAL {
            return Err(Error::input(format!(
                "{} values for {chirps} chirps x {bins} bins x {NUM_VIRTUAL} antennas",
                data.len()
            )));
        }
        Ok(Self { chirps, bins, data })
    }

    pub fn chirps(&self) -> usize {
        self.chirps
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    #[inline]
    pub fn get(&self, chirp: usize, bin: usize, va: usize) -> Complex64 {
        self.data[(chirp * self.bins + bin) * NUM_VIRTUAL + va]
    }

    /// One chirp, laid out `[bin][va]`.
    pub fn chirp(&self, chirp: usize) -> &[Complex64] {
        let n = self.bins * NUM_VIRTUAL;
        &self.data[chirp * n..(chirp + 1) * n]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }
}

/// Hann-windowed, zero-padded FFT along the sample axis of every chirp and
/// virtual antenna.
pub fn range_fft(cube: &DataCube, nfft: usize) -> Result<RangeProfiles> {
    let ns = cube.samples_per_chirp();
    if nfft < ns {
        return Err(Error::config(format!("range FFT size {nfft} is smaller than {ns} samples per chirp")));
    }
    let window = hann_window(ns);
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let chirps = cube.chirps();
    let mut out = vec![Complex64::default(); chirps * nfft * NUM_VIRTUAL];
    // All 12 antennas of a chirp go through one batched call.
    let mut buf = vec![Complex64::default(); nfft * NUM_VIRTUAL];
    for c in 0..chirps {
        let src = cube.chirp(c);
        buf.fill(Complex64::default());
        for va in 0..NUM_VIRTUAL {
            let lane = &mut buf[va * nfft..va * nfft + ns];
            for (m, (x, w)) in lane.iter_mut().zip(&window).enumerate() {
                *x = src[m * NUM_VIRTUAL + va] * *w;
            }
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        let dst = &mut out[c * nfft * NUM_VIRTUAL..(c + 1) * nfft * NUM_VIRTUAL];
        for va in 0..NUM_VIRTUAL {
            for b in 0..nfft {
                dst[b * NUM_VIRTUAL + va] = buf[va * nfft + b];
            }
        }
    }
    RangeProfiles::new(chirps, nfft, out)
}
