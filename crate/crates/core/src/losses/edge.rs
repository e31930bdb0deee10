use crate::error::{Error, Result};
use crate::geometry::{clip_polygon, polygon_area, Point2, RBox};
use crate::losses::{smooth_l1, RegressionTarget};
use crate::raster::GrayImage;

/// Box-size targets read off an edge-response map.
///
/// The map is sampled on a grid aligned with the box at twice the box
/// resolution (bilinear, border-clamped). Column and row sums form the
/// width/height profiles; a target is the span between the outermost
/// profile positions at or above half the profile maximum. A profile with
/// no response falls back to the input dimension.
pub fn edge_targets(edge_map: &GrayImage, rbox: &RBox) -> Result<RegressionTarget> {
    let (w, h) = (edge_map.width() as f64, edge_map.height() as f64);
    let bounds = [
        Point2::new(0.0, 0.0),
        Point2::new(w, 0.0),
        Point2::new(w, h),
        Point2::new(0.0, h),
    ];
    if polygon_area(&clip_polygon(&rbox.corners(), &bounds)) <= 0.0 {
        return Err(Error::DegenerateInput(
            "box lies fully outside the edge map".into(),
        ));
    }
    let nx = ((2.0 * rbox.w).ceil() as usize).max(2);
    let ny = ((2.0 * rbox.h).ceil() as usize).max(2);
    let step_x = rbox.w / nx as f64;
    let step_y = rbox.h / ny as f64;
    let (s, c) = rbox.theta.sin_cos();

    let mut cols = vec![0.0f64; nx];
    let mut rows = vec![0.0f64; ny];
    for (j, row) in rows.iter_mut().enumerate() {
        let v = -0.5 * rbox.h + (j as f64 + 0.5) * step_y;
        for (i, col) in cols.iter_mut().enumerate() {
            let u = -0.5 * rbox.w + (i as f64 + 0.5) * step_x;
            let x = rbox.cx + c * u - s * v;
            let y = rbox.cy + s * u + c * v;
            let val = edge_map.sample_bilinear(x, y);
            *col += val;
            *row += val;
        }
    }

    let span = |profile: &[f64], step: f64, fallback: f64| -> f64 {
        let max = profile.iter().cloned().fold(0.0f64, f64::max);
        if max <= 0.0 {
            return fallback;
        }
        let thr = 0.5 * max;
        let first = profile.iter().position(|&v| v >= thr).unwrap();
        let last = profile.iter().rposition(|&v| v >= thr).unwrap();
        ((last - first) as f64 * step).max(step)
    };

    Ok(RegressionTarget {
        w_t: span(&cols, step_x, rbox.w),
        h_t: span(&rows, step_y, rbox.h),
    })
}

/// Smooth-L1 edge loss between box dimensions and edge-derived targets.
pub fn edge_loss(edge_map: &GrayImage, rbox: &RBox, beta: f64) -> Result<f64> {
    let t = edge_targets(edge_map, rbox)?;
    Ok(smooth_l1(rbox.w, t.w_t, beta) + smooth_l1(rbox.h, t.h_t, beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_with_columns(w: u32, h: u32, xs: &[u32]) -> GrayImage {
        let mut img = GrayImage::new(w, h);
        for &x in xs {
            for y in 0..h {
                img.set(x, y, 1.0);
            }
        }
        img
    }

    #[test]
    fn two_bright_columns_give_their_span() {
        // columns centered at x = 40.5 and 60.5; box center x = 50.5
        let map = map_with_columns(101, 41, &[40, 60]);
        let rbox = RBox::new(50.5, 20.5, 30.0, 12.0, 0.0);
        let t = edge_targets(&map, &rbox).unwrap();
        assert!((t.w_t - 20.0).abs() <= 1.0, "w_t = {}", t.w_t);
        // rows saturate uniformly, so height falls back near the box height
        assert!((t.h_t - rbox.h).abs() <= 1.0, "h_t = {}", t.h_t);
    }

    #[test]
    fn blank_map_falls_back_to_box_size() {
        let map = GrayImage::new(64, 64);
        let rbox = RBox::new(32.0, 32.0, 20.0, 10.0, 0.3);
        let t = edge_targets(&map, &rbox).unwrap();
        assert_eq!(t.w_t, 20.0);
        assert_eq!(t.h_t, 10.0);
        assert_eq!(edge_loss(&map, &rbox, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn box_outside_map_is_degenerate() {
        let map = GrayImage::new(32, 32);
        let rbox = RBox::new(500.0, 500.0, 10.0, 5.0, 0.0);
        assert!(edge_targets(&map, &rbox).is_err());
    }
}
