use num_complex::Complex64;

use crate::array::NUM_VIRTUAL;
use crate::error::{Error, Result};
use crate::model::RadarConfig;

/// One frame of complex baseband samples, indexed `[chirp][sample][va]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCube {
    chirps: usize,
    samples_per_chirp: usize,
    data: Vec<Complex64>,
    pub frame_index: u64,
    /// s
    pub timestamp: f64,
}

impl DataCube {
    pub fn zeros(cfg: &RadarConfig, frame_index: u64, timestamp: f64) -> Self {
        Self {
            chirps: cfg.chirps_per_frame,
            samples_per_chirp: cfg.samples_per_chirp,
            data: vec![Complex64::new(0.0, 0.0); cfg.cube_len()],
            frame_index,
            timestamp,
        }
    }

    pub fn from_vec(cfg: &RadarConfig, data: Vec<Complex64>, frame_index: u64, timestamp: f64) -> Result<Self> {
        if data.len() != cfg.cube_len() {
            return Err(Error::input(format!("cube holds {} samples, config expects {}", data.len(), cfg.cube_len())));
        }
        if let Some(pos) = data.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::input(format!("non-finite sample at flat index {pos}")));
        }
        Ok(Self {
            chirps: cfg.chirps_per_frame,
            samples_per_chirp: cfg.samples_per_chirp,
            data,
            frame_index,
            timestamp,
        })
    }

    pub fn chirps(&self) -> usize {
        self.chirps
    }

    pub fn samples_per_chirp(&self) -> usize {
        self.samples_per_chirp
    }

    pub fn matches(&self, cfg: &RadarConfig) -> bool {
        self.chirps == cfg.chirps_per_frame && self.samples_per_chirp == cfg.samples_per_chirp
    }

    pub(crate) fn check_shape(&self, cfg: &RadarConfig) -> Result<()> {
        if self.matches(cfg) {
            Ok(())
        } else {
            Err(Error::input(format!(
                "cube shape {}x{} does not match config {}x{}",
                self.chirps, self.samples_per_chirp, cfg.chirps_per_frame, cfg.samples_per_chirp
            )))
        }
    }

    #[inline]
    pub fn index(&self, chirp: usize, sample: usize, va: usize) -> usize {
        (chirp * self.samples_per_chirp + sample) * NUM_VIRTUAL + va
    }

    #[inline]
    pub fn get(&self, chirp: usize, sample: usize, va: usize) -> Complex64 {
        self.data[self.index(chirp, sample, va)]
    }

    /// Samples of one chirp, `[sample][va]` flattened.
    pub fn chirp(&self, chirp: usize) -> &[Complex64] {
        let n = self.samples_per_chirp * NUM_VIRTUAL;
        &self.data[chirp * n..(chirp + 1) * n]
    }

    pub fn chirp_mut(&mut self, chirp: usize) -> &mut [Complex64] {
        let n = self.samples_per_chirp * NUM_VIRTUAL;
        &mut self.data[chirp * n..(chirp + 1) * n]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// Mean over chirps of every (sample, va) cell, `[sample][va]` flattened.
    pub fn chirp_mean(&self) -> Vec<Complex64> {
        let n = self.samples_per_chirp * NUM_VIRTUAL;
        let mut mean = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..self.chirps {
            for (m, x) in mean.iter_mut().zip(self.chirp(c)) {
                *m += *x;
            }
        }
        let scale = 1.0 / self.chirps as f64;
        for m in &mut mean {
            *m *= scale;
        }
        mean
    }

    /// Rounds every component to the nearest `f32`.
    pub fn quantize_f32(&mut self) {
        for c in &mut self.data {
            c.re = c.re as f32 as f64;
            c.im = c.im as f32 as f64;
        }
    }
}

impl std::ops::Add for &DataCube {
    type Output = DataCube;

    fn add(self, rhs: &DataCube) -> DataCube {
        assert_eq!(self.data.len(), rhs.data.len(), "cube shapes differ");
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&rhs.data) {
            *a += *b;
        }
        out
    }
}
