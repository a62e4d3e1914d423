//! WebAssembly bindings for `www/index.html`: one simulated benchmark
//! sequence, its ground-truth track, the range-azimuth map of any frame and
//! the five localizers run on demand.

use wasm_bindgen::prelude::*;

use radloc::dsp::{fft_2d_heatmaps, search_bins};
use radloc::eval::{Localizer, Method};
use radloc::sim::{synthesize_frame, BenchSpec, Scene};
use radloc::{RadarConfig, VirtualArrayLayout};

fn js(e: radloc::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    scene: Scene,
    localizer: Localizer,
}

#[wasm_bindgen]
impl Demo {
    /// Sequence `seed` of the standard benchmark.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<Demo, JsError> {
        let cfg = RadarConfig::default();
        let scene = BenchSpec::v1().scene(seed as usize, &cfg).map_err(js)?;
        Ok(Demo { scene, localizer: Localizer::new(cfg).with_workers(1) })
    }

    pub fn frames(&self) -> u32 {
        self.scene.trajectory.len() as u32
    }

    /// Ground-truth positions, flattened `x, y, z` per frame.
    pub fn track(&self) -> Result<Vec<f64>, JsError> {
        let cfg = &self.localizer.cfg;
        let mut out = Vec::with_capacity(3 * self.scene.trajectory.len());
        for i in 0..self.frames() {
            out.extend(self.scene.ground_truth(i as u64, cfg).map_err(js)?);
        }
        Ok(out)
    }

    /// Estimate for `frame` with `method` (pointcloud, fft2d, fft3d,
    /// music2d, music3d) as `[x, y, z]`; empty when no target was found.
    pub fn locate(&self, frame: u32, method: &str) -> Result<Vec<f64>, JsError> {
        let method: Method = method.parse().map_err(js)?;
        let cube = self.cube(frame)?;
        match self.localizer.locate(method, &cube) {
            Ok(e) => Ok(e.position().to_vec()),
            Err(radloc::Error::NoTarget) => Ok(Vec::new()),
            Err(e) => Err(js(e)),
        }
    }

    /// Range-azimuth magnitude map of `frame`, normalized to its maximum,
    /// row-major with [`Demo::map_rows`] range rows (bins 1 and up) by
    /// [`Demo::map_cols`] sine-space columns.
    pub fn range_azimuth(&self, frame: u32) -> Result<Vec<f32>, JsError> {
        let cube = self.cube(frame)?;
        let (az, _) = fft_2d_heatmaps(&cube, &self.localizer.layout).map_err(js)?;
        let rows = search_bins(az.rows);
        let slice = &az.values[rows.start * az.cols..rows.end * az.cols];
        let max = slice.iter().copied().fold(0.0, f64::max);
        let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
        Ok(slice.iter().map(|v| (v * scale) as f32).collect())
    }

    pub fn map_rows(&self) -> u32 {
        search_bins(radloc::dsp::RANGE_FFT_SIZE).len() as u32
    }

    pub fn map_cols(&self) -> u32 {
        radloc::dsp::ANGLE_FFT_SIZE as u32
    }

    /// Range of map row `row`, m.
    pub fn row_range(&self, row: u32) -> f64 {
        (row + 1) as f64 * self.localizer.cfg.derived().range_resolution
    }
}

impl Demo {
    fn cube(&self, frame: u32) -> Result<radloc::DataCube, JsError> {
        if frame >= self.frames() {
            return Err(JsError::new(&format!("frame {frame} out of range 0..{}", self.frames())));
        }
        let f = synthesize_frame(&self.scene, &self.localizer.cfg, &VirtualArrayLayout::default(), frame as u64);
        Ok(f.map_err(js)?.cube)
    }
}
