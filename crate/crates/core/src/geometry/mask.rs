use bitvec::order::Lsb0;
use bitvec::vec::BitVec;

use crate::geometry::{pixel_center, Point2};

/// Row-major bit raster; bit `(x, y)` sits at index `y * width + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: BitVec<u64, Lsb0>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: BitVec::repeat(false, (width as usize) * (height as usize)),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits.set((y * self.width + x) as usize, value);
    }

    /// Number of set pixels.
    pub fn area(&self) -> usize {
        self.bits.count_ones()
    }

    /// Set pixels in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.bits
            .iter_ones()
            .map(move |i| ((i as u32) % w, (i as u32) / w))
    }

    /// Centers of the set pixels, row-major.
    pub fn set_centers(&self) -> Vec<Point2> {
        self.iter_set().map(|(x, y)| pixel_center(x, y)).collect()
    }
}

/// Area and centroid of the set pixels (pixel centers).
///
/// An empty mask reports area 0 and the image center, so downstream scoring
/// has a well-defined point to work with.
pub fn mask_stats(mask: &BinaryMask) -> (usize, Point2) {
    let area = mask.area();
    if area == 0 {
        return (
            0,
            Point2::new(mask.width as f64 * 0.5, mask.height as f64 * 0.5),
        );
    }
    let (mut sx, mut sy) = (0.0, 0.0);
    for (x, y) in mask.iter_set() {
        sx += x as f64 + 0.5;
        sy += y as f64 + 0.5;
    }
    (area, Point2::new(sx / area as f64, sy / area as f64))
}

/// Dense per-pixel labeling: `0` background or ridge, `k >= 1` instance `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    width: u32,
    height: u32,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            labels: vec![0; (width as usize) * (height as usize)],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.labels[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, label: u32) {
        self.labels[(y * self.width + x) as usize] = label;
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.labels
    }

    /// Largest label present (0 for an all-background map).
    pub fn max_label(&self) -> u32 {
        self.labels.iter().copied().max().unwrap_or(0)
    }
}

/// Per-instance pixel sets, zero-indexed by instance.
///
/// Unlike [`LabelMap`] this representation lets regions from different
/// class-specific passes overlap: one pixel may belong to several
/// instances.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRegions {
    width: u32,
    height: u32,
    regions: Vec<Vec<u32>>,
}

impl InstanceRegions {
    pub fn new(width: u32, height: u32, regions: Vec<Vec<u32>>) -> Self {
        Self {
            width,
            height,
            regions,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn instance_count(&self) -> usize {
        self.regions.len()
    }

    /// Linear pixel indices of one instance, ascending.
    pub fn pixels(&self, instance: usize) -> &[u32] {
        &self.regions[instance]
    }

    /// Pixel centers of one instance.
    pub fn centers(&self, instance: usize) -> Vec<Point2> {
        self.regions[instance]
            .iter()
            .map(|&i| pixel_center(i % self.width, i / self.width))
            .collect()
    }

    /// Mask view of one instance.
    pub fn mask(&self, instance: usize) -> BinaryMask {
        let mut m = BinaryMask::new(self.width, self.height);
        for &i in &self.regions[instance] {
            m.set(i % self.width, i / self.width, true);
        }
        m
    }

    /// Split a label map into per-instance regions; label `k` feeds
    /// instance `k - 1` and instances absent from the map come out empty.
    pub fn from_label_map(map: &LabelMap, instance_count: usize) -> Self {
        let mut regions = vec![Vec::new(); instance_count.max(map.max_label() as usize)];
        for (i, &label) in map.as_slice().iter().enumerate() {
            if label >= 1 {
                regions[(label - 1) as usize].push(i as u32);
            }
        }
        Self {
            width: map.width(),
            height: map.height(),
            regions,
        }
    }
}
