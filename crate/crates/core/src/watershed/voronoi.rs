use crate::error::{Error, Result};
use crate::geometry::{AnnotatedPoint, LabelMap};

/// Nearest-point partition of the pixel grid.
///
/// Pixel centers strictly nearest to point `k` (zero-indexed) get label
/// `k + 1`; centers exactly equidistant from two or more points get the
/// ridge label `0`. Distances compare exactly in `f64`, which keeps the
/// partition reproducible and lets deliberately symmetric layouts produce
/// genuine ridges.
pub fn voronoi_partition(
    points: &[AnnotatedPoint],
    width: u32,
    height: u32,
) -> Result<LabelMap> {
    if points.is_empty() {
        return Err(Error::DegenerateInput(
            "voronoi_partition needs at least one point".into(),
        ));
    }
    if width == 0 || height == 0 {
        return Err(Error::Dimension("empty raster".into()));
    }
    for (i, p) in points.iter().enumerate() {
        let (x, y) = (p.point.x, p.point.y);
        if !(x >= 0.0 && x < width as f64 && y >= 0.0 && y < height as f64) {
            return Err(Error::Precondition(format!(
                "annotation point {i} at ({x}, {y}) lies outside the {width}x{height} image"
            )));
        }
    }
    let mut map = LabelMap::new(width, height);
    for y in 0..height {
        let cy = y as f64 + 0.5;
        for x in 0..width {
            let cx = x as f64 + 0.5;
            let mut best = f64::INFINITY;
            let mut label = 0u32;
            let mut tie = false;
            for (k, p) in points.iter().enumerate() {
                let dx = cx - p.point.x;
                let dy = cy - p.point.y;
                let d = dx * dx + dy * dy;
                if d < best {
                    best = d;
                    label = (k + 1) as u32;
                    tie = false;
                } else if d == best {
                    tie = true;
                }
            }
            map.set(x, y, if tie { 0 } else { label });
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_owns_every_pixel() {
        let pts = [AnnotatedPoint::new(3.0, 3.0, 0)];
        let map = voronoi_partition(&pts, 7, 5).unwrap();
        assert!(map.as_slice().iter().all(|&l| l == 1));
    }

    #[test]
    fn two_points_split_by_column() {
        let pts = [
            AnnotatedPoint::new(25.0, 50.0, 0),
            AnnotatedPoint::new(75.0, 50.0, 0),
        ];
        let map = voronoi_partition(&pts, 100, 100).unwrap();
        for y in 0..100 {
            for x in 0..50 {
                assert_eq!(map.get(x, y), 1, "({x},{y})");
            }
            for x in 50..100 {
                assert_eq!(map.get(x, y), 2, "({x},{y})");
            }
        }
    }

    #[test]
    fn half_integer_points_produce_a_ridge() {
        // bisector x = 50.5 runs through the centers of column 50
        let pts = [
            AnnotatedPoint::new(25.5, 50.5, 0),
            AnnotatedPoint::new(75.5, 50.5, 0),
        ];
        let map = voronoi_partition(&pts, 101, 101).unwrap();
        for y in 0..101 {
            assert_eq!(map.get(50, y), 0, "ridge expected at (50,{y})");
            assert_eq!(map.get(49, y), 1);
            assert_eq!(map.get(51, y), 2);
        }
    }

    #[test]
    fn empty_points_error() {
        assert!(voronoi_partition(&[], 4, 4).is_err());
    }

    #[test]
    fn outside_point_violates_precondition() {
        let pts = [AnnotatedPoint::new(10.0, 1.0, 0)];
        assert!(matches!(
            voronoi_partition(&pts, 8, 8),
            Err(Error::Precondition(_))
        ));
    }
}
