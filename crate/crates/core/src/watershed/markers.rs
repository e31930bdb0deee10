use crate::error::{Error, Result};
use crate::geometry::{AnnotatedPoint, LabelMap};
use crate::watershed::WatershedConfig;

/// Seed labels for the watershed: `0` unlabeled, `-1` sure background,
/// `k >= 1` foreground of instance `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerMap {
    width: u32,
    height: u32,
    markers: Vec<i32>,
}

impl MarkerMap {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> i32 {
        self.markers[(y * self.width + x) as usize]
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.markers
    }

    /// True when at least one background pixel is marked.
    pub fn has_background(&self) -> bool {
        self.markers.iter().any(|&m| m == -1)
    }
}

/// Plant watershed seeds from the annotation points and their Voronoi
/// partition.
///
/// Foreground: a disk of radius 1 px around each point (pixel centers
/// within 1 px). Background: every ridge pixel of the partition, plus every
/// pixel whose foreground prior `exp(-d^2 / (2 sigma^2))` against its own
/// cell's point falls below `tau_bg`; `sigma` is the config bandwidth
/// rescaled to this image. Foreground wins where the two overlap.
pub fn build_markers(
    points: &[AnnotatedPoint],
    voronoi: &LabelMap,
    cfg: &WatershedConfig,
) -> Result<MarkerMap> {
    if points.is_empty() {
        return Err(Error::DegenerateInput(
            "build_markers needs at least one point".into(),
        ));
    }
    let (width, height) = (voronoi.width(), voronoi.height());
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if points[i].point.distance(points[j].point) < 2.0 {
                return Err(Error::MarkerCollision { a: i, b: j });
            }
        }
    }

    let bg_radius = cfg.background_radius_at(width, height);
    let bg_radius_sq = bg_radius * bg_radius;
    let mut markers = vec![0i32; (width as usize) * (height as usize)];

    for y in 0..height {
        let cy = y as f64 + 0.5;
        for x in 0..width {
            let cx = x as f64 + 0.5;
            let idx = (y * width + x) as usize;
            let label = voronoi.get(x, y);
            if label == 0 {
                markers[idx] = -1; // ridge
                continue;
            }
            let p = points[(label - 1) as usize].point;
            let dx = cx - p.x;
            let dy = cy - p.y;
            if dx * dx + dy * dy > bg_radius_sq {
                markers[idx] = -1;
            }
        }
    }

    // foreground disks overwrite; a pixel grabbed by two instances is a
    // collision the pairwise test can miss only at exactly 2 px spacing
    for (k, p) in points.iter().enumerate() {
        let label = (k + 1) as i32;
        let (px, py) = (p.point.x, p.point.y);
        let x0 = ((px - 1.5).floor().max(0.0)) as u32;
        let x1 = ((px + 1.5).ceil().min(width as f64 - 1.0)) as u32;
        let y0 = ((py - 1.5).floor().max(0.0)) as u32;
        let y1 = ((py + 1.5).ceil().min(height as f64 - 1.0)) as u32;
        let mut planted = false;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let dx = x as f64 + 0.5 - px;
                let dy = y as f64 + 0.5 - py;
                if dx * dx + dy * dy <= 1.0 {
                    let idx = (y * width + x) as usize;
                    if markers[idx] >= 1 && markers[idx] != label {
                        return Err(Error::MarkerCollision {
                            a: (markers[idx] - 1) as usize,
                            b: k,
                        });
                    }
                    markers[idx] = label;
                    planted = true;
                }
            }
        }
        if !planted {
            return Err(Error::DegenerateInput(format!(
                "annotation point {k} plants no foreground pixel inside the image"
            )));
        }
    }

    Ok(MarkerMap {
        width,
        height,
        markers,
    })
}
