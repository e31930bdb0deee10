//! Minimal raster support: grayscale/color buffers, separable Gaussian
//! smoothing, central-difference gradients and bilinear sampling.

use crate::error::{Error, Result};

/// Row-major grayscale raster with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            pixels: vec![0.0; (width as usize) * (height as usize)],
        }
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != (width as usize) * (height as usize) {
            return Err(Error::Dimension(format!(
                "expected {} pixels for {}x{}, got {}",
                (width as usize) * (height as usize),
                width,
                height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.pixels[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: f64) {
        self.pixels[(y * self.width + x) as usize] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.pixels
    }

    pub fn diagonal(&self) -> f64 {
        ((self.width as f64).powi(2) + (self.height as f64).powi(2)).sqrt()
    }

    /// Value at a continuous point, bilinear between pixel centers and
    /// clamped at the borders.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let fx = (x - 0.5).clamp(0.0, (self.width - 1) as f64);
        let fy = (y - 0.5).clamp(0.0, (self.height - 1) as f64);
        let x0 = fx.floor() as u32;
        let y0 = fy.floor() as u32;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let tx = fx - x0 as f64;
        let ty = fy - y0 as f64;
        let top = self.get(x0, y0) * (1.0 - tx) + self.get(x1, y0) * tx;
        let bot = self.get(x0, y1) * (1.0 - tx) + self.get(x1, y1) * tx;
        top * (1.0 - ty) + bot * ty
    }
}

/// Row-major 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

impl ColorImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            pixels: vec![[0; 3]; (width as usize) * (height as usize)],
        }
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if pixels.len() != (width as usize) * (height as usize) {
            return Err(Error::Dimension(format!(
                "expected {} pixels for {}x{}, got {}",
                (width as usize) * (height as usize),
                width,
                height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        self.pixels[(y * self.width + x) as usize] = rgb;
    }

    pub fn diagonal(&self) -> f64 {
        ((self.width as f64).powi(2) + (self.height as f64).powi(2)).sqrt()
    }

    /// Rec. 601 luminance, scaled to `[0, 1]`.
    pub fn to_gray(&self) -> GrayImage {
        let pixels = self
            .pixels
            .iter()
            .map(|[r, g, b]| {
                (0.299 * *r as f64 + 0.587 * *g as f64 + 0.114 * *b as f64) / 255.0
            })
            .collect();
        GrayImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    if sigma <= 0.0 || radius < 1 {
        return vec![1.0];
    }
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable Gaussian blur with replicated borders. `sigma <= 0` is the
/// identity.
pub fn gaussian_smooth(img: &GrayImage, sigma: f64) -> GrayImage {
    let kernel = gaussian_kernel(sigma);
    if kernel.len() == 1 {
        return img.clone();
    }
    let radius = (kernel.len() / 2) as i64;
    let (w, h) = (img.width as i64, img.height as i64);
    let mut tmp = vec![0.0; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, &kv) in kernel.iter().enumerate() {
                let sx = (x + i as i64 - radius).clamp(0, w - 1);
                acc += kv * img.pixels[(y * w + sx) as usize];
            }
            tmp[(y * w + x) as usize] = acc;
        }
    }
    let mut out = vec![0.0; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, &kv) in kernel.iter().enumerate() {
                let sy = (y + i as i64 - radius).clamp(0, h - 1);
                acc += kv * tmp[(sy * w + x) as usize];
            }
            out[(y * w + x) as usize] = acc;
        }
    }
    GrayImage {
        width: img.width,
        height: img.height,
        pixels: out,
    }
}

/// Gradient magnitude by central differences, borders replicated.
pub fn gradient_magnitude(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width as i64, img.height as i64);
    let at = |x: i64, y: i64| img.pixels[(y.clamp(0, h - 1) * w + x.clamp(0, w - 1)) as usize];
    let mut out = vec![0.0; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let gx = 0.5 * (at(x + 1, y) - at(x - 1, y));
            let gy = 0.5 * (at(x, y + 1) - at(x, y - 1));
            out[(y * w + x) as usize] = (gx * gx + gy * gy).sqrt();
        }
    }
    GrayImage {
        width: img.width,
        height: img.height,
        pixels: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn luminance_weights() {
        let mut img = ColorImage::new(1, 1);
        img.set(0, 0, [255, 0, 0]);
        assert_relative_eq!(img.to_gray().get(0, 0), 0.299, epsilon = 1e-12);
    }

    #[test]
    fn smoothing_preserves_constants() {
        let img = GrayImage::from_pixels(5, 4, vec![0.25; 20]).unwrap();
        let out = gaussian_smooth(&img, 1.2);
        for &v in out.as_slice() {
            assert_relative_eq!(v, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn flat_image_has_zero_gradient() {
        let img = GrayImage::from_pixels(6, 6, vec![0.7; 36]).unwrap();
        assert!(gradient_magnitude(&img).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vertical_step_has_peak_at_edge() {
        let mut img = GrayImage::new(8, 3);
        for y in 0..3 {
            for x in 4..8 {
                img.set(x, y, 1.0);
            }
        }
        let g = gradient_magnitude(&img);
        assert_relative_eq!(g.get(3, 1), 0.5, epsilon = 1e-12);
        assert_relative_eq!(g.get(4, 1), 0.5, epsilon = 1e-12);
        assert_eq!(g.get(1, 1), 0.0);
    }

    #[test]
    fn bilinear_interpolates_between_centers() {
        let img = GrayImage::from_pixels(2, 1, vec![0.0, 1.0]).unwrap();
        assert_relative_eq!(img.sample_bilinear(1.0, 0.5), 0.5, epsilon = 1e-12);
        // clamped outside
        assert_relative_eq!(img.sample_bilinear(-3.0, 0.5), 0.0, epsilon = 1e-12);
        assert_relative_eq!(img.sample_bilinear(5.0, 0.5), 1.0, epsilon = 1e-12);
    }
}
