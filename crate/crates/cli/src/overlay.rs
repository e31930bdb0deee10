use std::path::Path;

use anyhow::{Context, Result};

use pointlab::geometry::{AnnotatedPoint, InstanceRegions, RBox};
use pointlab::raster::ColorImage;

pub fn load_color_image(path: &Path) -> Result<ColorImage> {
    let img = image::open(path)
        .with_context(|| format!("reading image {}", path.display()))?
        .into_rgb8();
    let (w, h) = img.dimensions();
    let mut out = ColorImage::new(w, h);
    for (x, y, px) in img.enumerate_pixels() {
        out.set(x, y, px.0);
    }
    Ok(out)
}

pub fn save_png(path: &Path, image: &ColorImage) -> Result<()> {
    let mut img = image::RgbImage::new(image.width(), image.height());
    for y in 0..image.height() {
        for x in 0..image.width() {
            img.put_pixel(x, y, image::Rgb(image.get(x, y)));
        }
    }
    img.save(path)
        .with_context(|| format!("writing {}", path.display()))
}

/// Stable instance palette: hues spaced by the golden angle.
fn instance_color(k: usize) -> [u8; 3] {
    let hue = (k as f64 * 137.508).rem_euclid(360.0);
    let h = hue / 60.0;
    let x = 1.0 - (h.rem_euclid(2.0) - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [(r * 255.0) as u8, (g * 255.0) as u8, (b * 255.0) as u8]
}

fn blend(dst: &mut ColorImage, x: u32, y: u32, color: [u8; 3], alpha: f64) {
    let base = dst.get(x, y);
    let mut out = [0u8; 3];
    for ch in 0..3 {
        out[ch] = (base[ch] as f64 * (1.0 - alpha) + color[ch] as f64 * alpha).round() as u8;
    }
    dst.set(x, y, out);
}

fn draw_segment(dst: &mut ColorImage, a: (f64, f64), b: (f64, f64), color: [u8; 3]) {
    let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    let steps = (len * 2.0).ceil().max(1.0) as usize;
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let x = a.0 + t * (b.0 - a.0);
        let y = a.1 + t * (b.1 - a.1);
        if x >= 0.0 && y >= 0.0 && (x as u32) < dst.width() && (y as u32) < dst.height() {
            dst.set(x as u32, y as u32, color);
        }
    }
}

fn draw_rbox(dst: &mut ColorImage, rbox: &RBox, color: [u8; 3]) {
    let c = rbox.corners();
    for k in 0..4 {
        let a = c[k];
        let b = c[(k + 1) % 4];
        draw_segment(dst, (a.x, a.y), (b.x, b.y), color);
    }
}

fn draw_point(dst: &mut ColorImage, p: &AnnotatedPoint, color: [u8; 3]) {
    let (px, py) = (p.point.x, p.point.y);
    draw_segment(dst, (px - 3.0, py), (px + 3.0, py), color);
    draw_segment(dst, (px, py - 3.0), (px, py + 3.0), color);
}

/// Debug rendering: basin tints (when regions are given), box outlines,
/// and a cross at every prompt point.
pub fn render_overlay(
    image: &ColorImage,
    regions: Option<&InstanceRegions>,
    boxes: &[RBox],
    points: &[AnnotatedPoint],
) -> ColorImage {
    let mut out = image.clone();
    if let Some(regions) = regions {
        let w = regions.width();
        for k in 0..regions.instance_count() {
            let color = instance_color(k);
            for &i in regions.pixels(k) {
                blend(&mut out, i % w, i / w, color, 0.35);
            }
        }
    }
    for (k, rbox) in boxes.iter().enumerate() {
        draw_rbox(&mut out, rbox, instance_color(k));
    }
    for p in points {
        draw_point(&mut out, p, [255, 255, 255]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_marks_box_edges_and_points() {
        let image = ColorImage::new(64, 64);
        let boxes = [RBox::new(32.0, 32.0, 20.0, 10.0, 0.3)];
        let pts = [AnnotatedPoint::new(32.0, 32.0, 0)];
        let out = render_overlay(&image, None, &boxes, &pts);
        let changed = (0..64u32)
            .flat_map(|y| (0..64u32).map(move |x| (x, y)))
            .filter(|&(x, y)| out.get(x, y) != [0, 0, 0])
            .count();
        assert!(changed > 40, "only {changed} pixels drawn");
    }

    #[test]
    fn png_roundtrip_preserves_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let mut image = ColorImage::new(8, 6);
        image.set(3, 2, [200, 10, 50]);
        image.set(7, 5, [1, 2, 3]);
        let path = dir.path().join("img.png");
        save_png(&path, &image).unwrap();
        let back = load_color_image(&path).unwrap();
        assert_eq!(back.get(3, 2), [200, 10, 50]);
        assert_eq!(back.get(7, 5), [1, 2, 3]);
        assert_eq!(back.get(0, 0), [0, 0, 0]);
    }
}
