//! Progressive label assignment over FPN anchor lattices.
//!
//! Early epochs take pseudo boxes straight from the watershed cascade;
//! once the detector warms up the boxes come from its own per-level
//! prediction grids (highest score among the per-level candidates nearest
//! to each point). Either way the boxes feed the same multi-level
//! assignment rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AnnotatedPoint, InstanceRegions, Point2, RBox};
use crate::raster::GrayImage;
use crate::watershed::{basins_to_pseudo_rboxes, point_seeded_watershed, WatershedConfig};

/// Default epoch at which assignment switches to dynamic pseudo labels.
pub const DEFAULT_SWITCH_EPOCH: usize = 6;

/// One pyramid level: stride in pixels and the half-open extent range
/// (lo, hi] it is responsible for regressing.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FpnLevel {
    pub index: usize,
    pub stride: u32,
    pub regress_range: (f64, f64),
}

impl FpnLevel {
    pub fn admits(&self, extent: f64) -> bool {
        let (lo, hi) = self.regress_range;
        extent > lo && extent <= hi
    }
}

/// P2 through P6 with the conventional anchor-free ranges.
pub fn default_fpn_levels() -> Vec<FpnLevel> {
    let strides = [4u32, 8, 16, 32, 64];
    let bounds = [0.0, 32.0, 64.0, 128.0, 256.0, f64::INFINITY];
    strides
        .iter()
        .enumerate()
        .map(|(i, &stride)| FpnLevel {
            index: i,
            stride,
            regress_range: (bounds[i], bounds[i + 1]),
        })
        .collect()
}

/// Strides must increase and the ranges must tile (0, inf) without gaps.
pub fn validate_levels(levels: &[FpnLevel]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::Precondition("no pyramid levels".into()));
    }
    for (k, level) in levels.iter().enumerate() {
        if level.stride == 0 {
            return Err(Error::Domain(format!("level {k} has zero stride")));
        }
        let (lo, hi) = level.regress_range;
        if !(lo < hi) {
            return Err(Error::Domain(format!(
                "level {k} range ({lo}, {hi}] is empty"
            )));
        }
        if k > 0 {
            if levels[k - 1].stride >= level.stride {
                return Err(Error::Domain(format!(
                    "stride {} at level {k} does not increase",
                    level.stride
                )));
            }
            if levels[k - 1].regress_range.1 != lo {
                return Err(Error::Domain(format!(
                    "range gap between levels {} and {k}",
                    k - 1
                )));
            }
        }
    }
    if levels[0].regress_range.0 != 0.0 {
        return Err(Error::Domain("first range must start at 0".into()));
    }
    if levels[levels.len() - 1].regress_range.1.is_finite() {
        return Err(Error::Domain("last range must be unbounded".into()));
    }
    Ok(())
}

/// Anchor lattice dimensions for one level: ceil(image / stride) per axis.
pub fn grid_dims(stride: u32, image_w: u32, image_h: u32) -> (usize, usize) {
    let s = stride as usize;
    (
        (image_w as usize).div_ceil(s),
        (image_h as usize).div_ceil(s),
    )
}

/// Row-major anchor centers: cell (i, j) sits at (j*s + s/2, i*s + s/2).
pub fn anchor_points(level: &FpnLevel, image_w: u32, image_h: u32) -> Vec<Point2> {
    let (gw, gh) = grid_dims(level.stride, image_w, image_h);
    let s = level.stride as f64;
    let mut pts = Vec::with_capacity(gw * gh);
    for i in 0..gh {
        for j in 0..gw {
            pts.push(Point2::new(j as f64 * s + s / 2.0, i as f64 * s + s / 2.0));
        }
    }
    pts
}

/// Per-level prediction grids, row-major over the anchor lattice.
#[derive(Debug, Clone)]
pub struct LevelPredictions {
    pub level_index: usize,
    pub grid_w: usize,
    pub grid_h: usize,
    pub boxes: Vec<RBox>,
    pub scores: Vec<f64>,
}

impl LevelPredictions {
    pub fn validate(&self, level: &FpnLevel, image_w: u32, image_h: u32) -> Result<()> {
        let (gw, gh) = grid_dims(level.stride, image_w, image_h);
        if (self.grid_w, self.grid_h) != (gw, gh) {
            return Err(Error::Dimension(format!(
                "level {} grid is {}x{}, expected {}x{}",
                self.level_index, self.grid_w, self.grid_h, gw, gh
            )));
        }
        let n = gw * gh;
        if self.boxes.len() != n || self.scores.len() != n {
            return Err(Error::Dimension(format!(
                "level {} holds {} boxes / {} scores for {} cells",
                self.level_index,
                self.boxes.len(),
                self.scores.len(),
                n
            )));
        }
        if let Some(s) = self
            .scores
            .iter()
            .find(|s| !(s.is_finite() && (0.0..=1.0).contains(*s)))
        {
            return Err(Error::Domain(format!(
                "score {s} outside [0,1] at level {}",
                self.level_index
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelSource {
    WatershedPhase,
    DynamicPhase,
}

#[derive(Debug, Clone)]
pub struct PseudoLabel {
    pub rbox: RBox,
    pub gt_index: usize,
    pub source: LabelSource,
}

/// Nearest-anchor lookup result; `clamped` marks points outside the image
/// that were snapped to the border cell.
#[derive(Debug, Clone, Copy)]
pub struct AnchorCandidate {
    pub rbox: RBox,
    pub score: f64,
    pub clamped: bool,
}

fn nearest_cell(coord: f64, stride: u32, cells: usize) -> (usize, bool) {
    let q = coord / stride as f64;
    let f = q.floor();
    // an exact lattice boundary is equidistant to both cells; take the lower
    let mut idx = if q == f && f >= 1.0 { f - 1.0 } else { f };
    let mut clamped = false;
    if idx < 0.0 {
        idx = 0.0;
        clamped = true;
    }
    let max = (cells - 1) as f64;
    if idx > max {
        idx = max;
        clamped = true;
    }
    (idx as usize, clamped)
}

/// The prediction at the lattice cell nearest to `g`, by index arithmetic.
pub fn nearest_anchor_candidate(
    g: Point2,
    preds: &LevelPredictions,
    level: &FpnLevel,
    image_w: u32,
    image_h: u32,
) -> Result<AnchorCandidate> {
    preds.validate(level, image_w, image_h)?;
    let (jx, cx) = nearest_cell(g.x, level.stride, preds.grid_w);
    let (iy, cy) = nearest_cell(g.y, level.stride, preds.grid_h);
    let cell = iy * preds.grid_w + jx;
    Ok(AnchorCandidate {
        rbox: preds.boxes[cell],
        score: preds.scores[cell],
        clamped: cx || cy,
    })
}

/// One pseudo label per point: the highest-scoring candidate among the
/// per-level predictions nearest to it, ties to the lowest level index.
pub fn dynamic_pseudo_labels(
    gts: &[Point2],
    all_preds: &[LevelPredictions],
    levels: &[FpnLevel],
    image_w: u32,
    image_h: u32,
) -> Result<Vec<PseudoLabel>> {
    validate_levels(levels)?;
    if all_preds.len() != levels.len() {
        return Err(Error::Precondition(format!(
            "{} prediction grids for {} levels",
            all_preds.len(),
            levels.len()
        )));
    }
    for (preds, level) in all_preds.iter().zip(levels) {
        if preds.level_index != level.index {
            return Err(Error::Precondition(format!(
                "prediction grid for level {} paired with level {}",
                preds.level_index, level.index
            )));
        }
        preds.validate(level, image_w, image_h)?;
    }
    let mut out = Vec::with_capacity(gts.len());
    for (gt_index, &g) in gts.iter().enumerate() {
        let mut best: Option<AnchorCandidate> = None;
        for (preds, level) in all_preds.iter().zip(levels) {
            let cand = nearest_anchor_candidate(g, preds, level, image_w, image_h)?;
            let better = match &best {
                None => true,
                Some(b) => cand.score > b.score,
            };
            if better {
                best = Some(cand);
            }
        }
        let best = best.expect("at least one level");
        out.push(PseudoLabel {
            rbox: best.rbox,
            gt_index,
            source: LabelSource::DynamicPhase,
        });
    }
    Ok(out)
}

/// Per-level assignment grid: -1 negative, k >= 0 positive for gt k.
#[derive(Debug, Clone)]
pub struct LevelAssignment {
    pub level_index: usize,
    pub grid_w: usize,
    pub grid_h: usize,
    pub cells: Vec<i32>,
}

#[derive(Debug, Clone)]
pub struct Assignment {
    pub levels: Vec<LevelAssignment>,
    pub positives_per_gt: Vec<usize>,
}

/// Anchor-free assignment: an anchor is positive for a pseudo box when it
/// lies strictly inside the rotated box and the box's max half-extent
/// falls in the level's range; overlapping claims go to the smallest box
/// area, then the lowest gt index.
pub fn standard_label_assign(
    pls: &[PseudoLabel],
    levels: &[FpnLevel],
    image_w: u32,
    image_h: u32,
) -> Result<Assignment> {
    validate_levels(levels)?;
    if image_w == 0 || image_h == 0 {
        return Err(Error::Dimension("empty image".into()));
    }
    let mut out_levels = Vec::with_capacity(levels.len());
    let mut positives = vec![0usize; pls.len()];
    for level in levels {
        let (gw, gh) = grid_dims(level.stride, image_w, image_h);
        let anchors = anchor_points(level, image_w, image_h);
        let mut cells = vec![-1i32; gw * gh];
        for (cell, &a) in anchors.iter().enumerate() {
            let mut best = -1i32;
            let mut best_area = f64::INFINITY;
            for (k, pl) in pls.iter().enumerate() {
                let extent = pl.rbox.w.max(pl.rbox.h) / 2.0;
                if !level.admits(extent) || !pl.rbox.contains(a, true) {
                    continue;
                }
                let area = pl.rbox.w * pl.rbox.h;
                if area < best_area {
                    best_area = area;
                    best = k as i32;
                }
            }
            cells[cell] = best;
            if best >= 0 {
                positives[best as usize] += 1;
            }
        }
        out_levels.push(LevelAssignment {
            level_index: level.index,
            grid_w: gw,
            grid_h: gh,
            cells,
        });
    }
    Ok(Assignment {
        levels: out_levels,
        positives_per_gt: positives,
    })
}

/// Progressive label assignment for one image.
///
/// Before `switch_epoch` the boxes come from the point-seeded watershed;
/// from it onward they are read out of the supplied prediction grids.
pub fn pla(
    epoch: usize,
    switch_epoch: usize,
    image: &GrayImage,
    gts: &[AnnotatedPoint],
    preds: Option<&[LevelPredictions]>,
    cfg: &WatershedConfig,
    levels: &[FpnLevel],
) -> Result<(Assignment, Vec<PseudoLabel>)> {
    validate_levels(levels)?;
    let pls = if epoch < switch_epoch {
        let map = point_seeded_watershed(image, gts, cfg)?;
        let regions = InstanceRegions::from_label_map(&map, gts.len());
        basins_to_pseudo_rboxes(&regions)?
            .into_iter()
            .enumerate()
            .map(|(gt_index, bb)| PseudoLabel {
                rbox: bb.rbox,
                gt_index,
                source: LabelSource::WatershedPhase,
            })
            .collect()
    } else {
        let preds = preds.ok_or_else(|| {
            Error::Precondition(format!(
                "epoch {epoch} >= switch epoch {switch_epoch} requires prediction grids"
            ))
        })?;
        let points: Vec<Point2> = gts.iter().map(|g| g.point).collect();
        dynamic_pseudo_labels(&points, preds, levels, image.width(), image.height())?
    };
    let assignment = standard_label_assign(&pls, levels, image.width(), image.height())?;
    Ok((assignment, pls))
}
