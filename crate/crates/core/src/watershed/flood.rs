use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geometry::LabelMap;
use crate::raster::{gaussian_smooth, GrayImage};
use crate::watershed::{MarkerMap, WatershedConfig};

/// Queue entry ordered by (altitude, seed distance, insertion sequence).
struct Entry {
    altitude: f64,
    dist: f64,
    seq: u64,
    pixel: u32,
    label: i32,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // reversed so the max-heap pops the lowest entry first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .altitude
            .total_cmp(&self.altitude)
            .then_with(|| other.dist.total_cmp(&self.dist))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Marker-controlled watershed flooding of the smoothed luminance relief.
///
/// Meyer-style: marked pixels seed a priority flood and every remaining
/// pixel joins the region that reaches it first. A claim is ordered by the
/// absolute smoothed-luminance difference across the crossed pixel edge
/// (boundaries live between pixels, so an ideal step edge splits exactly
/// between the dark and bright sides), then by the Euclidean distance to
/// the claiming instance's seed, then by insertion order. Background
/// claims carry infinite distance: on a plateau instances expand in
/// distance order and take precedence, which is what makes a zero-gradient
/// image reproduce the Voronoi cells minus the background markers.
///
/// Basins are connected supersets of their foreground disks; background
/// pixels keep label 0 in the output.
pub fn watershed(
    image: &GrayImage,
    markers: &MarkerMap,
    cfg: &WatershedConfig,
) -> Result<LabelMap> {
    let (width, height) = (image.width(), image.height());
    if markers.width() != width || markers.height() != height {
        return Err(Error::Dimension(format!(
            "marker map {}x{} does not match image {}x{}",
            markers.width(),
            markers.height(),
            width,
            height
        )));
    }
    if !markers.as_slice().iter().any(|&m| m >= 1) {
        return Err(Error::DegenerateInput("no foreground markers".into()));
    }
    if !markers.has_background() {
        return Err(Error::DegenerateInput("no background markers".into()));
    }

    let relief = gaussian_smooth(image, cfg.smoothing_at(width, height));
    let relief = relief.as_slice();

    // per-instance seed location: centroid of its foreground marker disk
    let max_label = markers.as_slice().iter().copied().max().unwrap_or(0);
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); (max_label.max(0) as usize) + 1];
    for y in 0..height {
        for x in 0..width {
            let m = markers.get(x, y);
            if m >= 1 {
                let s = &mut sums[m as usize];
                s.0 += x as f64 + 0.5;
                s.1 += y as f64 + 0.5;
                s.2 += 1;
            }
        }
    }
    let seeds: Vec<(f64, f64)> = sums
        .iter()
        .map(|&(sx, sy, n)| {
            if n == 0 {
                (f64::NAN, f64::NAN)
            } else {
                (sx / n as f64, sy / n as f64)
            }
        })
        .collect();

    let dist_to_seed = |pixel: u32, label: i32| -> f64 {
        if label < 1 {
            return f64::INFINITY;
        }
        let (sx, sy) = seeds[label as usize];
        let x = (pixel % width) as f64 + 0.5;
        let y = (pixel / width) as f64 + 0.5;
        ((x - sx) * (x - sx) + (y - sy) * (y - sy)).sqrt()
    };

    let n = (width as usize) * (height as usize);
    let mut labels: Vec<i32> = markers.as_slice().to_vec();
    let mut heap: BinaryHeap<Entry> = BinaryHeap::with_capacity(n / 4);
    let mut seq: u64 = 0;

    let w = width as i64;
    let h = height as i64;
    let neighbors = |idx: u32, out: &mut [u32; 4]| -> usize {
        let x = (idx as i64) % w;
        let y = (idx as i64) / w;
        let mut count = 0;
        for (dx, dy) in [(0i64, -1i64), (-1, 0), (1, 0), (0, 1)] {
            let (nx, ny) = (x + dx, y + dy);
            if nx >= 0 && nx < w && ny >= 0 && ny < h {
                out[count] = (ny * w + nx) as u32;
                count += 1;
            }
        }
        count
    };

    let push = |heap: &mut BinaryHeap<Entry>,
                    seq: &mut u64,
                    from: u32,
                    to: u32,
                    label: i32,
                    dist: f64| {
        heap.push(Entry {
            altitude: (relief[from as usize] - relief[to as usize]).abs(),
            dist,
            seq: *seq,
            pixel: to,
            label,
        });
        *seq += 1;
    };

    let mut scratch = [0u32; 4];
    for idx in 0..n as u32 {
        let label = labels[idx as usize];
        if label == 0 {
            continue;
        }
        let count = neighbors(idx, &mut scratch);
        for &nb in &scratch[..count] {
            if labels[nb as usize] == 0 {
                push(&mut heap, &mut seq, idx, nb, label, dist_to_seed(nb, label));
            }
        }
    }

    while let Some(e) = heap.pop() {
        if labels[e.pixel as usize] != 0 {
            continue;
        }
        labels[e.pixel as usize] = e.label;
        let count = neighbors(e.pixel, &mut scratch);
        for &nb in &scratch[..count] {
            if labels[nb as usize] == 0 {
                push(
                    &mut heap,
                    &mut seq,
                    e.pixel,
                    nb,
                    e.label,
                    dist_to_seed(nb, e.label),
                );
            }
        }
    }

    let mut out = LabelMap::new(width, height);
    for y in 0..height {
        for x in 0..width {
            let l = labels[(y * width + x) as usize];
            if l >= 1 {
                out.set(x, y, l as u32);
            }
        }
    }
    Ok(out)
}
