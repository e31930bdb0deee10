//! Point-seeded segmentation: Voronoi partition of the annotation points,
//! marker construction, and marker-controlled watershed flooding of the
//! smoothed gradient magnitude.
//!
//! The stages compose into the pseudo-label front end:
//!
//! 1. [`voronoi_partition`] assigns every pixel to its nearest annotation
//!    point (ties become ridge pixels),
//! 2. [`build_markers`] plants a foreground disk per instance and marks
//!    sure background from the ridges plus a Gaussian prior threshold,
//! 3. [`watershed`] floods the gradient relief from the markers,
//! 4. [`basins_to_pseudo_rboxes`] fits a minimum-area rotated box to each
//!    basin.
//!
//! [`class_specific_watershed`] repeats 1-3 once per class so instances of
//! different classes never clip one another's cells; the per-instance
//! regions it returns may overlap across classes.

mod flood;
mod markers;
mod voronoi;

pub use flood::watershed;
pub use markers::{build_markers, MarkerMap};
pub use voronoi::voronoi_partition;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{min_area_rect, AnnotatedPoint, InstanceRegions, LabelMap, RBox};
use crate::raster::GrayImage;

/// Reference scale the marker/smoothing defaults are expressed at.
const REFERENCE_DIAGONAL: f64 = 1448.1546878700494; // diag of 1024 x 1024

/// Watershed stage parameters.
///
/// Lengths are given at a 1024 x 1024 reference scale and rescale linearly
/// with the image diagonal, so behavior is resolution independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WatershedConfig {
    /// Foreground Gaussian prior bandwidth, px at reference scale.
    pub sigma_fg: f64,
    /// Background threshold on the prior; pixels whose prior falls below it
    /// become sure background.
    pub tau_bg: f64,
    /// Gradient pre-smoothing bandwidth, px at reference scale.
    pub gradient_smoothing: f64,
}

impl Default for WatershedConfig {
    fn default() -> Self {
        Self {
            sigma_fg: 16.0,
            tau_bg: 0.01,
            gradient_smoothing: 1.5,
        }
    }
}

impl WatershedConfig {
    /// Scale factor of an image relative to the reference diagonal.
    pub fn scale_for(width: u32, height: u32) -> f64 {
        ((width as f64).powi(2) + (height as f64).powi(2)).sqrt() / REFERENCE_DIAGONAL
    }

    /// Effective foreground bandwidth at an image size.
    pub fn sigma_fg_at(&self, width: u32, height: u32) -> f64 {
        self.sigma_fg * Self::scale_for(width, height)
    }

    /// Effective smoothing bandwidth at an image size.
    pub fn smoothing_at(&self, width: u32, height: u32) -> f64 {
        self.gradient_smoothing * Self::scale_for(width, height)
    }

    /// Distance past which the foreground prior drops below `tau_bg`.
    pub fn background_radius_at(&self, width: u32, height: u32) -> f64 {
        self.sigma_fg_at(width, height) * (2.0 * (1.0 / self.tau_bg).ln()).sqrt()
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma_fg > 0.0 && self.sigma_fg.is_finite()) {
            return Err(Error::Domain(format!(
                "sigma_fg must be positive, got {}",
                self.sigma_fg
            )));
        }
        if !(self.tau_bg > 0.0 && self.tau_bg < 1.0) {
            return Err(Error::Domain(format!(
                "tau_bg must lie in (0, 1), got {}",
                self.tau_bg
            )));
        }
        if !(self.gradient_smoothing >= 0.0 && self.gradient_smoothing.is_finite()) {
            return Err(Error::Domain(format!(
                "gradient_smoothing must be non-negative, got {}",
                self.gradient_smoothing
            )));
        }
        Ok(())
    }
}

/// Pseudo box fitted to one basin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasinBox {
    pub rbox: RBox,
    /// Set when the basin had too few non-collinear pixels for a real fit
    /// and a 1 x 1 box at the centroid was substituted.
    pub degenerate: bool,
}

/// Fit a minimum-area rotated box to every instance region.
///
/// Regions with fewer than three non-collinear pixel centers yield a
/// 1 x 1 fallback box at their centroid, flagged degenerate; so do empty
/// regions, centered at the image center.
pub fn basins_to_pseudo_rboxes(basins: &InstanceRegions) -> Result<Vec<BasinBox>> {
    if basins.instance_count() == 0 {
        return Err(Error::DegenerateInput(
            "no instance regions to fit".into(),
        ));
    }
    let mut out = Vec::with_capacity(basins.instance_count());
    for k in 0..basins.instance_count() {
        let centers = basins.centers(k);
        match min_area_rect(&centers) {
            Ok(rbox) if rbox.h > 0.0 => out.push(BasinBox {
                rbox,
                degenerate: false,
            }),
            _ => {
                let n = centers.len().max(1) as f64;
                let (mut cx, mut cy) = (0.0, 0.0);
                for p in &centers {
                    cx += p.x;
                    cy += p.y;
                }
                if centers.is_empty() {
                    cx = basins.width() as f64 * 0.5;
                    cy = basins.height() as f64 * 0.5;
                } else {
                    cx /= n;
                    cy /= n;
                }
                out.push(BasinBox {
                    rbox: RBox::new(cx, cy, 1.0, 1.0, 0.0),
                    degenerate: true,
                });
            }
        }
    }
    Ok(out)
}

/// Label map from the full Voronoi/marker/watershed cascade.
pub fn point_seeded_watershed(
    image: &GrayImage,
    points: &[AnnotatedPoint],
    cfg: &WatershedConfig,
) -> Result<LabelMap> {
    cfg.validate()?;
    let voronoi = voronoi_partition(points, image.width(), image.height())?;
    let markers = build_markers(points, &voronoi, cfg)?;
    watershed(image, &markers, cfg)
}

/// One watershed pass per class, merged into per-instance regions.
///
/// Instances only compete with other points of their own class, so a
/// contained instance of another class no longer clips the container's
/// Voronoi cell. Regions of different classes may overlap; indices follow
/// the input annotation order.
pub fn class_specific_watershed(
    image: &GrayImage,
    points: &[AnnotatedPoint],
    cfg: &WatershedConfig,
) -> Result<InstanceRegions> {
    cfg.validate()?;
    if points.is_empty() {
        return Err(Error::DegenerateInput(
            "class_specific_watershed needs at least one point".into(),
        ));
    }
    let mut classes: Vec<usize> = points.iter().map(|p| p.class_id).collect();
    classes.sort_unstable();
    classes.dedup();

    let mut regions: Vec<Vec<u32>> = vec![Vec::new(); points.len()];
    for class_id in classes {
        let members: Vec<usize> = (0..points.len())
            .filter(|&i| points[i].class_id == class_id)
            .collect();
        let subset: Vec<AnnotatedPoint> = members.iter().map(|&i| points[i]).collect();
        let labels = point_seeded_watershed(image, &subset, cfg)?;
        for (i, &label) in labels.as_slice().iter().enumerate() {
            if label >= 1 {
                regions[members[(label - 1) as usize]].push(i as u32);
            }
        }
    }
    Ok(InstanceRegions::new(image.width(), image.height(), regions))
}
