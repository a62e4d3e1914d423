//! FMCW mmWave radar simulation and drone localization.
//!
//! The crate covers the whole chain from a synthetic scene to a position
//! estimate: [`sim`] renders data cubes, [`dsp`] and [`music`] hold the
//! classical localizers, [`heatmap`] prepares training tensors, [`io`] reads
//! and writes captures and datasets, and [`eval`] scores pipelines.

pub mod array;
pub mod cube;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod heatmap;
pub mod io;
pub mod model;
pub mod music;
pub mod sim;

pub use array::{VirtualArrayLayout, NUM_VIRTUAL};
pub use cube::DataCube;
pub use error::{Error, Result};
pub use geometry::PositionEstimate;
pub use model::{derived_params, freq_to_range, phase_to_angle, phase_to_velocity, DerivedParams, RadarConfig};
