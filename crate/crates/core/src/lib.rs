//! Unsupervised change detection between two co-registered images using
//! rough-set clustering.
//!
//! The pipeline maps every pixel of both images to a scalar, groups pixels
//! into indiscernibility classes by their joint quantized before/after
//! values, and scores each pixel by how much of its class falls into a
//! candidate changed set. Thresholding that score gives the binary mask.
//!
//! - [`rough`]: the generic rough-set engine (partitions, approximations,
//!   accuracy, rough membership).
//! - [`imaging`]: raster I/O, the scalar transform, differencing, binning.
//! - [`pipeline`]: the end-to-end detector and mask output.
//! - [`baselines`]: hard/fuzzy c-means and plain differencing detectors.
//! - [`eval`]: confusion-matrix metrics and a synthetic pair generator.

pub mod baselines;
pub mod error;
pub mod eval;
pub mod imaging;
pub mod pipeline;
pub mod rough;

pub use error::{Error, Result};
pub use imaging::{RasterImage, ScalarField};
pub use pipeline::{
    detect_changes, CandidateRule, ChangeAnalysis, ChangeMask, DetectionParams, DetectionReport,
};
pub use rough::{ElementSet, InformationSystem, Partition, RoughApproximation};
