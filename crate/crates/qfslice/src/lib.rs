//! Linear slices of the quasifuchsian space of once-punctured tori.
//!
//! The library builds marked two-generator groups from complex
//! Fenchel-Nielsen data, runs a trace-based discreteness oracle over
//! windows of the TrB plane at fixed TrA, labels the components of the
//! accepted region, and evaluates the closed-form constants (tube-radius
//! threshold, scaling limit) attached to these slices.

pub mod analysis;
pub mod cli;
pub mod discreteness;
pub mod error;
pub mod groups;
pub mod moebius;
pub mod output;
pub mod presets;
pub mod raster;
pub mod words;

pub use error::{Error, Result};
