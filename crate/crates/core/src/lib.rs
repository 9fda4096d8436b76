//! Recognition of infrared beacons that broadcast a 12-bit identifier as a
//! sequence of diagonal light patterns, as seen by a 100 Hz band-pass camera.
//!
//! The pipeline runs per frame: [`detector`] finds beacon-shaped blobs,
//! [`tracker`] links them over time, and [`decoder`] turns each track's
//! orientation samples into bits matched against the [`codebook`].
//! [`simulator`] renders annotated synthetic sequences to test against.

pub mod codebook;
pub mod decoder;
pub mod detector;
pub mod error;
pub mod imaging;
pub mod pipeline;
pub mod report;
pub mod simulator;
pub mod tracker;

pub use error::{Error, Result};
