//! Planar geometry: points, rotated boxes, 2-D Gaussians, hull-based
//! enclosing shapes and raster masks.
//!
//! Conventions used throughout the crate:
//!
//! * image coordinates are `x` right, `y` down; pixel `(i, j)` is the unit
//!   square whose center is the point `(i + 0.5, j + 0.5)`,
//! * rotated boxes follow the long-edge convention: `w >= h` and the angle
//!   lies in `[-pi/2, pi/2)` after normalization.

mod hull;
mod mask;
mod rbox;

pub use hull::{convex_hull, min_area_rect, min_enclosing_circle};
pub use mask::{mask_stats, BinaryMask, InstanceRegions, LabelMap};
pub use rbox::{
    clip_polygon, polygon_area, rbox_iou, rbox_to_gaussian, gaussian_to_rbox, Gaussian2, RBox,
};

use serde::{Deserialize, Serialize};

/// A point in continuous image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_sq(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(self, other: Point2) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

/// A single-point instance annotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedPoint {
    pub point: Point2,
    pub class_id: usize,
}

impl AnnotatedPoint {
    pub fn new(x: f64, y: f64, class_id: usize) -> Self {
        Self {
            point: Point2::new(x, y),
            class_id,
        }
    }
}

/// Center of pixel `(i, j)`.
pub fn pixel_center(i: u32, j: u32) -> Point2 {
    Point2::new(i as f64 + 0.5, j as f64 + 0.5)
}
