//! Synthetic drone scenes and data cubes with known ground truth.

pub mod bench;
pub mod drone;
pub mod synth;
pub mod trajectory;

pub use bench::{BenchSpec, SceneFrames, SIM_BENCH_V1};
pub use drone::{scatterers_at, DroneModel, DronePose, Scatterer};
pub use synth::{
    add_noise, noise_std_for_snr, synthesize_frame, MultipathGhost, PointTarget, Scene, StaticReflector, SynthFrame,
};
pub use trajectory::{gen_trajectory, Bounds, Trajectory, TrajectorySample};
