//! The seeded synthetic benchmark `sim-bench-v1`.

use crate::array::VirtualArrayLayout;
use crate::error::Result;
use crate::model::RadarConfig;
use crate::sim::drone::DroneModel;
use crate::sim::synth::{noise_std_for_snr, synthesize_frame, MultipathGhost, Scene, StaticReflector, SynthFrame};
use crate::sim::trajectory::{gen_trajectory, Bounds};

pub const SIM_BENCH_V1: &str = "sim-bench-v1";

/// Range at which the body-scatterer SNR is specified, m.
pub const SNR_REFERENCE_RANGE: f64 = 2.5;

#[derive(Debug, Clone, serde::Serialize)]
pub struct BenchSpec {
    pub name: String,
    pub sequences: usize,
    pub duration: f64,
    pub bounds: Bounds,
    pub max_speed: f64,
    pub body_snr_db: f64,
    pub ghost: MultipathGhost,
    pub static_clutter: Vec<StaticReflector>,
}

impl BenchSpec {
    pub fn v1() -> Self {
        Self {
            name: SIM_BENCH_V1.to_string(),
            sequences: 10,
            duration: 60.0,
            bounds: Bounds { min: [-1.0, 1.2, -0.3], max: [1.0, 3.8, 0.8] },
            max_speed: 1.0,
            body_snr_db: 15.0,
            ghost: MultipathGhost { delay_offset: 0.6, relative_amplitude: 0.3 },
            static_clutter: vec![
                StaticReflector { position: [-1.6, 4.3, 0.2], amplitude: 4.0 },
                StaticReflector { position: [1.9, 2.4, -0.6], amplitude: 2.0 },
                StaticReflector { position: [0.2, 5.2, 1.1], amplitude: 6.0 },
                StaticReflector { position: [0.0, 0.8, -0.9], amplitude: 0.5 },
            ],
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        (name == SIM_BENCH_V1).then(Self::v1)
    }

    /// Scene for sequence `index`, whose trajectory seed is `index`.
    pub fn scene(&self, index: usize, cfg: &RadarConfig) -> Result<Scene> {
        sequence_scene(
            index as u64,
            self.duration,
            &self.bounds,
            self.max_speed,
            self.body_snr_db,
            Some(self.ghost),
            self.static_clutter.clone(),
            cfg,
        )
    }
}

/// A drone sequence with the benchmark's noise convention: `body_snr_db`
/// is the body SNR in one range bin at [`SNR_REFERENCE_RANGE`].
#[allow(clippy::too_many_arguments)]
pub fn sequence_scene(
    seed: u64,
    duration: f64,
    bounds: &Bounds,
    max_speed: f64,
    body_snr_db: f64,
    ghost: Option<MultipathGhost>,
    static_clutter: Vec<StaticReflector>,
    cfg: &RadarConfig,
) -> Result<Scene> {
    let drone = DroneModel::default();
    let trajectory = gen_trajectory(seed, duration, bounds, max_speed, 1.0 / cfg.frame_period)?;
    let body_amplitude = drone.body_rcs / (SNR_REFERENCE_RANGE * SNR_REFERENCE_RANGE);
    Ok(Scene {
        drone: Some(drone),
        trajectory,
        static_clutter,
        targets: Vec::new(),
        noise_std: noise_std_for_snr(body_amplitude, body_snr_db, cfg.samples_per_chirp),
        multipath_ghosts: ghost.into_iter().collect(),
        noise_seed: seed.wrapping_mul(1_000_003).wrapping_add(17),
        start_time: 0.0,
    })
}

/// Lazily rendered frames of one scene, with ground truth.
pub struct SceneFrames<'a> {
    scene: &'a Scene,
    cfg: RadarConfig,
    layout: VirtualArrayLayout,
    next: u64,
    frames: u64,
}

impl<'a> SceneFrames<'a> {
    pub fn new(scene: &'a Scene, cfg: &RadarConfig, layout: &VirtualArrayLayout) -> Self {
        Self { scene, cfg: *cfg, layout: layout.clone(), next: 0, frames: scene.trajectory.len() as u64 }
    }
}

impl Iterator for SceneFrames<'_> {
    type Item = Result<(SynthFrame, [f64; 3])>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.frames {
            return None;
        }
        let i = self.next;
        self.next += 1;
        Some(synthesize_frame(self.scene, &self.cfg, &self.layout, i).and_then(|f| {
            let gt = self.scene.ground_truth(i, &self.cfg)?;
            Ok((f, gt))
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn v1_shape() {
        let spec = BenchSpec::v1();
        let cfg = RadarConfig::default();
        assert_eq!(spec.sequences, 10);
        let scene = spec.scene(0, &cfg).unwrap();
        assert_eq!(scene.trajectory.len(), 600);
        assert_eq!(scene.multipath_ghosts.len(), 1);
        scene.validate().unwrap();
        // Reflectors all inside the unambiguous range.
        let max = cfg.derived().max_range;
        assert!(spec.static_clutter.iter().all(|c| crate::geometry::norm(c.position) < max));
    }

    #[test]
    fn frames_iterate_with_truth() {
        let cfg = RadarConfig::default();
        let mut spec = BenchSpec::v1();
        spec.duration = 0.3;
        let scene = spec.scene(2, &cfg).unwrap();
        let frames: Vec<_> =
            SceneFrames::new(&scene, &cfg, &VirtualArrayLayout::default()).collect::<Result<_>>().unwrap();
        assert_eq!(frames.len(), 3);
        assert!(spec.bounds.contains(frames[1].1, 1e-12));
    }
}
