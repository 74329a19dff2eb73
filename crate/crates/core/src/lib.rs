//! relprep-core: preprocessing and evaluation toolkit for visual
//! relationship predicate prediction.
//!
//! The crate covers the full desk-scale pipeline: annotation parsing and
//! split derivation, the eleven input-image preprocessing methods, a
//! softmax reference classifier trained with the mini-batch
//! Nesterov-momentum recipe, Recall@k / per-predicate / error-taxonomy
//! scoring, and Tukey HSD groupings with a compact letter display.

pub mod dataset;
pub mod evaluation;
pub mod geometry;
pub mod predictor;
pub mod raster;
pub mod report;
pub mod stats;
pub mod transforms;

pub use geometry::{BBox, Mask};
pub use raster::Raster;
