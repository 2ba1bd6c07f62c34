//! Core algorithms for gaze-based affective screening: dispersion-based
//! event detection, scan-path rasterization, a deterministic augmentation
//! bank, dataset splitting, residual CNN classifiers, and a parameterized
//! synthetic-gaze simulator.
//!
//! The crate is `no_std` (with `alloc`) so the algorithmic core stays free
//! of filesystem and platform concerns; file formats and the CLI live in
//! the companion `scanpath-cli` crate. All floating-point math routes
//! through `num_traits::Float`, and every random draw comes from the
//! seeded [`rng::Pcg32`] generator, so results are reproducible bit for
//! bit across runs.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod augment;
pub mod dataset;
pub mod eval;
pub mod events;
pub mod gaze;
pub mod geometry;
pub mod model;
pub mod raster;
pub mod render;
pub mod rng;
pub mod simulate;

pub use gaze::{GazeRecording, GazeSample, GroupLabel};
pub use geometry::ViewingGeometry;
pub use raster::RasterImage;
