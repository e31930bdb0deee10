//! Label-generation kernels for point-supervised oriented object detection.
//!
//! The crate turns single-point instance annotations into rotated-box pseudo
//! labels and the geometric losses needed to train a detector on them:
//!
//! * [`geometry`]: rotated boxes, 2-D Gaussians, convex hulls, enclosing
//!   shapes and binary masks,
//! * [`raster`]: small grayscale/color raster helpers (smoothing, gradients,
//!   bilinear sampling),
//! * [`watershed`]: Voronoi partitions and marker-controlled watershed
//!   segmentation seeded from annotation points,
//! * [`maskselect`]: scoring and selection among externally produced mask
//!   candidates, and branch routing by instance density,
//! * [`losses`]: Gaussian Wasserstein / Bhattacharyya losses, mask regression
//!   targets, edge and self-supervised consistency terms,
//! * [`assign`]: FPN anchor grids and the progressive label assignment that
//!   switches from watershed boxes to score-driven dynamic labels.
//!
//! Everything is deterministic: equal inputs produce bitwise-equal outputs.

pub mod assign;
pub mod error;
pub mod geometry;
pub mod losses;
pub mod maskselect;
pub mod raster;
pub mod watershed;

pub use error::{Error, Result};
pub use geometry::{AnnotatedPoint, BinaryMask, Gaussian2, LabelMap, Point2, RBox};
