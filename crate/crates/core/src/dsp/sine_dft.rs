//! Zero-padded angle DFTs evaluated directly. With at most 8 non-zero taps
//! a direct sum over a precomputed twiddle table is as fast as an FFT and
//! lands exactly on the sine-space grid.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Direction cosine at the centre of column `k` of an `n`-point shifted
/// angle spectrum: `(k - n/2) * 2/n`, so the middle column is boresight.
#[inline]
pub(crate) fn column_sine(k: usize, n: usize) -> f64 {
    2.0 * (k as f64 - (n / 2) as f64) / n as f64
}

/// Twiddles `exp(-j pi p s_k)` for integer tap positions `0..taps` and the
/// `n` shifted columns.
pub(crate) struct SineDft {
    n: usize,
    taps: usize,
    /// `[column][tap]`
    table: Vec<Complex64>,
}

impl SineDft {
    pub(crate) fn new(taps: usize, n: usize) -> Self {
        let mut table = Vec::with_capacity(n * taps);
        for k in 0..n {
            let s = column_sine(k, n);
            for p in 0..taps {
                table.push(Complex64::from_polar(1.0, -PI * p as f64 * s));
            }
        }
        Self { n, taps, table }
    }

    pub(crate) fn columns(&self) -> usize {
        self.n
    }

    /// Complex spectrum of `x` (tap `p` at position `p`) into `out[..n]`.
    #[inline]
    pub(crate) fn transform(&self, x: &[Complex64], out: &mut [Complex64]) {
        debug_assert!(x.len() <= self.taps);
        for (k, o) in out.iter_mut().enumerate().take(self.n) {
            let tw = &self.table[k * self.taps..k * self.taps + x.len()];
            *o = x.iter().zip(tw).map(|(a, b)| a * b).sum();
        }
    }

    #[inline]
    pub(crate) fn magnitudes(&self, x: &[Complex64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate().take(self.n) {
            let tw = &self.table[k * self.taps..k * self.taps + x.len()];
            *o = x.iter().zip(tw).map(|(a, b)| a * b).sum::<Complex64>().norm_sqr().sqrt();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::FftPlanner;

    #[test]
    fn matches_shifted_fft() {
        let x: Vec<Complex64> = (0..8).map(|i| Complex64::new(i as f64 * 0.3 - 1.0, (i * i) as f64 * 0.1)).collect();
        let n = 180;
        let mut buf = vec![Complex64::default(); n];
        buf[..8].copy_from_slice(&x);
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let mut out = vec![Complex64::default(); n];
        SineDft::new(8, n).transform(&x, &mut out);
        for k in 0..n {
            let fft_bin = (k + n / 2) % n;
            assert!((out[k] - buf[fft_bin]).norm() < 1e-12);
        }
    }

    #[test]
    fn columns_are_uniform_in_sine() {
        assert_eq!(column_sine(90, 180), 0.0);
        assert_eq!(column_sine(0, 180), -1.0);
        for k in 1..180 {
            assert!((column_sine(k, 180) - column_sine(k - 1, 180) - 2.0 / 180.0).abs() < 1e-12);
        }
    }
}
