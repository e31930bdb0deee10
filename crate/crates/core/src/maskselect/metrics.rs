use crate::geometry::{
    clip_polygon, min_area_rect, min_enclosing_circle, polygon_area, BinaryMask, Point2, RBox,
};
use crate::maskselect::{ClassPrior, MetricParams};
use crate::raster::ColorImage;

/// Corner points of the mask's pixel footprint, enough for hulls: per row
/// the four corners of the leftmost and rightmost set pixels. Pixel (x, y)
/// covers the unit square [x, x+1] x [y, y+1].
fn footprint_corners(mask: &BinaryMask) -> Vec<Point2> {
    let mut corners = Vec::new();
    for y in 0..mask.height() {
        let mut lo = None;
        let mut hi = 0u32;
        for x in 0..mask.width() {
            if mask.get(x, y) {
                if lo.is_none() {
                    lo = Some(x);
                }
                hi = x;
            }
        }
        if let Some(lo) = lo {
            let (y0, y1) = (y as f64, y as f64 + 1.0);
            corners.push(Point2::new(lo as f64, y0));
            corners.push(Point2::new(lo as f64, y1));
            corners.push(Point2::new(hi as f64 + 1.0, y0));
            corners.push(Point2::new(hi as f64 + 1.0, y1));
        }
    }
    corners
}

fn footprint_rect(mask: &BinaryMask) -> RBox {
    min_area_rect(&footprint_corners(mask)).expect("footprint of a non-empty mask spans an area")
}

/// Fewer than 3 non-collinear pixel centers.
fn is_degenerate(mask: &BinaryMask) -> bool {
    let centers = mask.set_centers();
    if centers.len() < 3 {
        return true;
    }
    let a = centers[0];
    let b = centers[1];
    centers[2..].iter().all(|c| {
        let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        cross == 0.0
    })
}

fn image_rect(width: u32, height: u32) -> [Point2; 4] {
    let (w, h) = (width as f64, height as f64);
    [
        Point2::new(0.0, 0.0),
        Point2::new(w, 0.0),
        Point2::new(w, h),
        Point2::new(0.0, h),
    ]
}

fn clipped_area(poly: &[Point2], width: u32, height: u32) -> f64 {
    polygon_area(&clip_polygon(poly, &image_rect(width, height)))
}

/// Gaussian alignment between the prompt and the mask rectangle center,
/// zero when the prompt falls outside the mask's min-area rectangle.
pub fn score_center_alignment(
    mask: &BinaryMask,
    prompt: Point2,
    image_diag: f64,
    p: &MetricParams,
) -> f64 {
    assert!(mask.area() > 0, "center alignment needs a non-empty mask");
    let rect = footprint_rect(mask);
    if !rect.contains(prompt, false) {
        return 0.0;
    }
    let d = prompt.distance(Point2::new(rect.cx, rect.cy));
    let sigma_c = p.sigma_c_factor * image_diag;
    (-d * d / (2.0 * sigma_c * sigma_c)).exp()
}

/// Prompt-weighted color spread inside the mask, mapped through exp(-s/lambda).
///
/// Per-channel weighted standard deviation over 8-bit values with Gaussian
/// weights centered on the prompt, averaged across the three channels.
pub fn score_color_consistency(
    image: &ColorImage,
    mask: &BinaryMask,
    prompt: Point2,
    p: &MetricParams,
) -> f64 {
    assert_eq!(
        (mask.width(), mask.height()),
        (image.width(), image.height()),
        "mask and image dimensions differ"
    );
    assert!(mask.area() > 0, "color consistency needs a non-empty mask");
    let sigma_c = p.sigma_c_factor * image.diagonal();
    let inv_two_sigma_sq = 1.0 / (2.0 * sigma_c * sigma_c);
    let (x0, y0) = mask.iter_set().next().expect("non-empty");
    let anchor = image.get(x0, y0);
    let mut w_total = 0.0;
    // moments shifted by the first sample keep zero spread exact
    let mut m1 = [0.0f64; 3];
    let mut m2 = [0.0f64; 3];
    for (x, y) in mask.iter_set() {
        let c = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
        let w = (-c.distance_sq(prompt) * inv_two_sigma_sq).exp();
        let rgb = image.get(x, y);
        w_total += w;
        for ch in 0..3 {
            let v = rgb[ch] as f64 - anchor[ch] as f64;
            m1[ch] += w * v;
            m2[ch] += w * v * v;
        }
    }
    assert!(w_total > 0.0, "weights vanished");
    let mut mean_std = 0.0;
    for ch in 0..3 {
        let mu = m1[ch] / w_total;
        let var = (m2[ch] / w_total - mu * mu).max(0.0);
        mean_std += var.sqrt();
    }
    mean_std /= 3.0;
    (-mean_std / p.lambda_color).exp()
}

/// Mask area over the area of its min-area rectangle clipped to the image.
pub fn score_rectangularity(mask: &BinaryMask) -> f64 {
    assert!(mask.area() > 0, "rectangularity needs a non-empty mask");
    if is_degenerate(mask) {
        return 1.0;
    }
    let rect = footprint_rect(mask);
    let denom = clipped_area(&rect.corners(), mask.width(), mask.height());
    if denom <= 0.0 {
        return 1.0;
    }
    (mask.area() as f64 / denom).min(1.0)
}

/// Mask area over the area of its min enclosing circle clipped to the image.
pub fn score_circularity(mask: &BinaryMask) -> f64 {
    assert!(mask.area() > 0, "circularity needs a non-empty mask");
    if is_degenerate(mask) {
        return 1.0;
    }
    let (center, radius) =
        min_enclosing_circle(&footprint_corners(mask)).expect("non-empty point set");
    let sides = 720usize;
    let poly: Vec<Point2> = (0..sides)
        .map(|k| {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / sides as f64;
            Point2::new(center.x + radius * phi.cos(), center.y + radius * phi.sin())
        })
        .collect();
    let denom = clipped_area(&poly, mask.width(), mask.height());
    if denom <= 0.0 {
        return 1.0;
    }
    (mask.area() as f64 / denom).min(1.0)
}

/// 1 inside the class's admissible aspect-ratio band, exponential decay
/// outside it.
pub fn score_aspect_ratio(mask: &BinaryMask, prior: &ClassPrior, p: &MetricParams) -> f64 {
    assert!(mask.area() > 0, "aspect ratio needs a non-empty mask");
    let rect = footprint_rect(mask);
    let (long, short) = (rect.w.max(rect.h), rect.w.min(rect.h));
    if short <= 0.0 {
        return 0.0;
    }
    let ar = long / short;
    let (r_min, r_max) = prior.ar_range;
    if ar >= r_min && ar <= r_max {
        return 1.0;
    }
    let d = if ar > r_max {
        ar / r_max - 1.0
    } else {
        r_min / ar - 1.0
    };
    (-p.k_ar * d).exp()
}

/// All five metric values in normative order, plus a degeneracy flag for
/// masks too thin to bound properly.
#[derive(Debug, Clone, Copy)]
pub struct MetricScores {
    pub values: [f64; 5],
    pub degenerate: bool,
}

impl MetricScores {
    pub fn compute(
        image: &ColorImage,
        mask: &BinaryMask,
        prompt: Point2,
        prior: &ClassPrior,
        p: &MetricParams,
    ) -> Self {
        let values = [
            score_center_alignment(mask, prompt, image.diagonal(), p),
            score_color_consistency(image, mask, prompt, p),
            score_rectangularity(mask),
            score_circularity(mask),
            score_aspect_ratio(mask, prior, p),
        ];
        Self {
            values,
            degenerate: is_degenerate(mask),
        }
    }

    pub fn total(&self, weights: &[f64; 5]) -> f64 {
        self.values
            .iter()
            .zip(weights.iter())
            .map(|(v, w)| v * w)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect_mask(w: u32, h: u32, x0: u32, y0: u32, rw: u32, rh: u32) -> BinaryMask {
        let mut m = BinaryMask::new(w, h);
        for y in y0..y0 + rh {
            for x in x0..x0 + rw {
                m.set(x, y, true);
            }
        }
        m
    }

    fn disk_mask(w: u32, h: u32, cx: f64, cy: f64, r: f64) -> BinaryMask {
        let mut m = BinaryMask::new(w, h);
        for y in 0..h {
            for x in 0..w {
                let dx = x as f64 + 0.5 - cx;
                let dy = y as f64 + 0.5 - cy;
                if dx * dx + dy * dy <= r * r {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    #[test]
    fn center_alignment_peaks_at_rectangle_center() {
        let mask = rect_mask(64, 64, 10, 20, 21, 11);
        let p = MetricParams::default();
        let center = Point2::new(20.5, 25.5);
        assert!((score_center_alignment(&mask, center, 200.0, &p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn center_alignment_zero_outside_rectangle() {
        let mask = rect_mask(64, 64, 10, 20, 21, 11);
        let p = MetricParams::default();
        let outside = Point2::new(50.0, 25.5);
        assert_eq!(score_center_alignment(&mask, outside, 200.0, &p), 0.0);
    }

    #[test]
    fn center_alignment_one_sigma_value() {
        let mask = rect_mask(64, 64, 10, 20, 21, 11);
        let p = MetricParams::default();
        // sigma_c = 0.05 * 200 = 10; prompt 10 px right of center, inside
        let prompt = Point2::new(30.5, 25.5);
        let got = score_center_alignment(&mask, prompt, 200.0, &p);
        assert!((got - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn color_consistency_uniform_is_one() {
        let mut image = ColorImage::new(16, 16);
        for y in 0..16 {
            for x in 0..16 {
                image.set(x, y, [40, 90, 200]);
            }
        }
        let mask = rect_mask(16, 16, 2, 2, 10, 10);
        let p = MetricParams::default();
        let got = score_color_consistency(&image, &mask, Point2::new(7.0, 7.0), &p);
        assert!((got - 1.0).abs() < 1e-12);
    }

    #[test]
    fn color_consistency_two_point_distribution() {
        // one black and one white pixel, prompt equidistant: equal weights,
        // weighted std per channel = 127.5, score = exp(-4.25)
        let mut image = ColorImage::new(4, 1);
        image.set(0, 0, [0, 0, 0]);
        image.set(1, 0, [255, 255, 255]);
        let mut mask = BinaryMask::new(4, 1);
        mask.set(0, 0, true);
        mask.set(1, 0, true);
        let p = MetricParams::default();
        let got = score_color_consistency(&image, &mask, Point2::new(1.0, 0.5), &p);
        assert!((got - (-4.25f64).exp()).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn color_consistency_matches_two_pass_oracle() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as u32
        };
        let mut image = ColorImage::new(24, 24);
        let mut mask = BinaryMask::new(24, 24);
        for y in 0..24 {
            for x in 0..24 {
                let v = next();
                image.set(x, y, [(v & 0xff) as u8, ((v >> 8) & 0xff) as u8, ((v >> 16) & 0xff) as u8]);
                if next() % 3 != 0 {
                    mask.set(x, y, true);
                }
            }
        }
        let p = MetricParams::default();
        let prompt = Point2::new(9.3, 14.1);
        let got = score_color_consistency(&image, &mask, prompt, &p);

        let sigma_c = p.sigma_c_factor * image.diagonal();
        let mut mean_std = 0.0;
        for ch in 0..3 {
            let (mut wsum, mut vsum) = (0.0, 0.0);
            for (x, y) in mask.iter_set() {
                let c = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
                let w = (-c.distance_sq(prompt) / (2.0 * sigma_c * sigma_c)).exp();
                wsum += w;
                vsum += w * image.get(x, y)[ch] as f64;
            }
            let mu = vsum / wsum;
            let mut dev = 0.0;
            for (x, y) in mask.iter_set() {
                let c = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
                let w = (-c.distance_sq(prompt) / (2.0 * sigma_c * sigma_c)).exp();
                dev += w * (image.get(x, y)[ch] as f64 - mu).powi(2);
            }
            mean_std += (dev / wsum).sqrt();
        }
        let expect = (-(mean_std / 3.0) / p.lambda_color).exp();
        assert!((got - expect).abs() < 1e-9, "got {got}, expect {expect}");
    }

    #[test]
    fn rectangularity_of_rectangle_disk_and_l_shape() {
        let rect = rect_mask(64, 64, 5, 9, 20, 10);
        assert!((score_rectangularity(&rect) - 1.0).abs() < 1e-9);

        let disk = disk_mask(80, 80, 40.5, 40.5, 30.0);
        let got = score_rectangularity(&disk);
        assert!(
            (got - std::f64::consts::FRAC_PI_4).abs() < 0.05,
            "disk rectangularity {got}"
        );

        let mut l_shape = rect_mask(32, 32, 2, 2, 10, 10);
        for y in 12..22 {
            for x in 12..22 {
                l_shape.set(x, y, true);
            }
        }
        let got = score_rectangularity(&l_shape);
        assert!((got - 0.5).abs() < 0.05, "L-shape rectangularity {got}");
    }

    #[test]
    fn circularity_of_disk_square_and_bar() {
        let disk = disk_mask(80, 80, 40.5, 40.5, 30.0);
        let got = score_circularity(&disk);
        assert!((got - 1.0).abs() < 0.05, "disk circularity {got}");

        let square = rect_mask(64, 64, 10, 10, 30, 30);
        let got = score_circularity(&square);
        assert!(
            (got - std::f64::consts::FRAC_2_PI).abs() < 0.01,
            "square circularity {got}"
        );

        let bar = rect_mask(64, 64, 5, 30, 50, 2);
        let got = score_circularity(&bar);
        let expect = 100.0 / (std::f64::consts::PI * 25.02f64.powi(2));
        assert!(
            (got - expect).abs() / expect < 0.2,
            "bar circularity {got} vs {expect}"
        );
    }

    #[test]
    fn circularity_clips_circle_to_image() {
        // half-disk against the left border: the enclosing circle hangs
        // outside, clipping roughly halves its area
        let half_disk = disk_mask(64, 64, 0.0, 32.0, 25.0);
        let got = score_circularity(&half_disk);
        assert!(got >= 0.85, "clipped circularity {got}");
    }

    #[test]
    fn aspect_ratio_band_and_decay() {
        let p = MetricParams::default();
        let prior = ClassPrior::default();
        let ar2 = rect_mask(64, 64, 2, 2, 20, 10);
        assert!((score_aspect_ratio(&ar2, &prior, &p) - 1.0).abs() < 1e-12);

        let ar5 = rect_mask(64, 64, 2, 2, 50, 10);
        assert!((score_aspect_ratio(&ar5, &prior, &p) - 1.0).abs() < 1e-12);

        let ar6 = rect_mask(64, 64, 2, 2, 60, 10);
        let got = score_aspect_ratio(&ar6, &prior, &p);
        assert!((got - (-0.2f64).exp()).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn degenerate_masks_take_convention_values() {
        let mut single = BinaryMask::new(8, 8);
        single.set(3, 3, true);
        assert_eq!(score_rectangularity(&single), 1.0);
        assert_eq!(score_circularity(&single), 1.0);

        let mut line = BinaryMask::new(8, 8);
        for x in 1..6 {
            line.set(x, 4, true);
        }
        assert_eq!(score_rectangularity(&line), 1.0);
        assert_eq!(score_circularity(&line), 1.0);
    }

    #[test]
    fn scores_stay_in_unit_interval() {
        let mut image = ColorImage::new(48, 48);
        for y in 0..48 {
            for x in 0..48 {
                image.set(x, y, [(x * 5) as u8, (y * 5) as u8, 128]);
            }
        }
        let prior = ClassPrior::default();
        let p = MetricParams::default();
        for mask in [
            rect_mask(48, 48, 4, 4, 17, 9),
            disk_mask(48, 48, 24.5, 24.5, 11.0),
            rect_mask(48, 48, 0, 0, 48, 3),
        ] {
            let s = MetricScores::compute(&image, &mask, Point2::new(20.0, 20.0), &prior, &p);
            for (k, v) in s.values.iter().enumerate() {
                assert!((0.0..=1.0).contains(v), "metric {k} out of range: {v}");
            }
        }
    }
}
