//! Finger-vein verification with an intensity-distribution soft trait.
//!
//! Each ROI is separated into a vein-texture foreground and a smooth
//! background layer. A primary texture descriptor (LBP, WLD or HOG) is
//! matched by a linear SVM on absolute feature differences, a soft trait
//! computed from the background (M&V, AM&V or HSP) is matched by Manhattan
//! distance, and the two min-max normalised scores are fused by a weighted
//! sum. [`evalproto`] drives complete verification experiments.

pub mod config;
pub mod error;
pub mod evalproto;
pub mod features;
pub mod imgcore;
pub mod layers;
pub mod matcher;
pub mod textfmt;

pub use error::{Error, Result};
