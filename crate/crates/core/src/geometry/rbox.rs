use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;

use std::f64::consts::{FRAC_PI_2, PI};

/// Rotated rectangle `(cx, cy, w, h, theta)` in image coordinates.
///
/// Construction normalizes to the long-edge convention: `w >= h` and
/// `theta` in `[-pi/2, pi/2)`. `theta` is the angle between the `w` edge
/// and the `x` axis, positive toward `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub theta: f64,
}

/// Wrap an angle into `[-pi/2, pi/2)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta - PI * (theta / PI + 0.5).floor();
    // floor can land on the closed end for inputs a hair below pi/2
    if t >= FRAC_PI_2 {
        t - PI
    } else {
        t
    }
}

impl RBox {
    /// Build a normalized box. `w` and `h` must be positive and finite.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, theta: f64) -> Self {
        assert!(
            w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite() && theta.is_finite(),
            "rbox dimensions must be positive and finite (w={w}, h={h}, theta={theta})"
        );
        let (w, h, theta) = if w >= h {
            (w, h, wrap_angle(theta))
        } else {
            (h, w, wrap_angle(theta + FRAC_PI_2))
        };
        Self { cx, cy, w, h, theta }
    }

    pub fn center(&self) -> Point2 {
        Point2::new(self.cx, self.cy)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Long-over-short edge ratio, always `>= 1`.
    pub fn aspect_ratio(&self) -> f64 {
        self.w.max(self.h) / self.w.min(self.h)
    }

    /// Corners in order, starting at the `(-w/2, -h/2)` corner of the local
    /// frame and walking the perimeter.
    pub fn corners(&self) -> [Point2; 4] {
        let (s, c) = self.theta.sin_cos();
        let (hw, hh) = (0.5 * self.w, 0.5 * self.h);
        let rot = |x: f64, y: f64| Point2::new(self.cx + c * x - s * y, self.cy + s * x + c * y);
        [
            rot(-hw, -hh),
            rot(hw, -hh),
            rot(hw, hh),
            rot(-hw, hh),
        ]
    }

    /// Point containment. `strict` excludes the boundary.
    pub fn contains(&self, p: Point2, strict: bool) -> bool {
        let (s, c) = self.theta.sin_cos();
        let dx = p.x - self.cx;
        let dy = p.y - self.cy;
        // rotate by -theta into the box frame
        let lx = c * dx + s * dy;
        let ly = -s * dx + c * dy;
        if strict {
            lx.abs() < 0.5 * self.w && ly.abs() < 0.5 * self.h
        } else {
            lx.abs() <= 0.5 * self.w && ly.abs() <= 0.5 * self.h
        }
    }
}

/// A non-degenerate 2-D Gaussian: mean and SPD covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian2 {
    mu: Vector2<f64>,
    sigma: Matrix2<f64>,
}

impl Gaussian2 {
    /// Validates symmetry (within `1e-9`) and positive definiteness; the
    /// stored covariance is exactly symmetrized.
    pub fn new(mu: Vector2<f64>, sigma: Matrix2<f64>) -> Result<Self> {
        if (sigma[(0, 1)] - sigma[(1, 0)]).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "covariance is not symmetric: {} vs {}",
                sigma[(0, 1)],
                sigma[(1, 0)]
            )));
        }
        let b = 0.5 * (sigma[(0, 1)] + sigma[(1, 0)]);
        let sym = Matrix2::new(sigma[(0, 0)], b, b, sigma[(1, 1)]);
        // both eigenvalues positive <=> positive trace and determinant
        if !(sym.determinant() > 0.0 && sym.trace() > 0.0) {
            return Err(Error::Domain(format!(
                "covariance is not positive definite: det={}, trace={}",
                sym.determinant(),
                sym.trace()
            )));
        }
        Ok(Self { mu, sigma: sym })
    }

    pub fn mu(&self) -> Vector2<f64> {
        self.mu
    }

    pub fn sigma(&self) -> Matrix2<f64> {
        self.sigma
    }
}

/// Gaussian whose density level sets match the box: mean at the center,
/// covariance `R diag((w/2)^2, (h/2)^2) R^T`.
pub fn rbox_to_gaussian(rbox: &RBox) -> Gaussian2 {
    let (s, c) = rbox.theta.sin_cos();
    let a = 0.25 * rbox.w * rbox.w;
    let b = 0.25 * rbox.h * rbox.h;
    let sigma = Matrix2::new(
        c * c * a + s * s * b,
        c * s * (a - b),
        c * s * (a - b),
        s * s * a + c * c * b,
    );
    Gaussian2 {
        mu: Vector2::new(rbox.cx, rbox.cy),
        sigma,
    }
}

/// Inverse of [`rbox_to_gaussian`] via closed-form eigendecomposition.
///
/// Near-isotropic covariances (eigenvalue ratio below `1 + 1e-9`) take
/// angle zero so the output does not jitter with rounding noise.
pub fn gaussian_to_rbox(g: &Gaussian2) -> RBox {
    let s = g.sigma();
    let (a, b, c) = (s[(0, 0)], s[(0, 1)], s[(1, 1)]);
    let half_trace = 0.5 * (a + c);
    let delta = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let l1 = half_trace + delta;
    let l2 = half_trace - delta;
    let theta = if l1 / l2 < 1.0 + 1e-9 {
        0.0
    } else {
        0.5 * (2.0 * b).atan2(a - c)
    };
    RBox::new(g.mu().x, g.mu().y, 2.0 * l1.sqrt(), 2.0 * l2.sqrt(), theta)
}

/// Shoelace area of a simple polygon (absolute value).
pub fn polygon_area(poly: &[Point2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        twice += p.x * q.y - q.x * p.y;
    }
    0.5 * twice.abs()
}

/// Sutherland-Hodgman clip of `subject` by a convex polygon.
///
/// `clip` must wind positively (shoelace sum > 0); both box corner orders
/// produced in this crate do.
pub fn clip_polygon(subject: &[Point2], clip: &[Point2]) -> Vec<Point2> {
    let mut output: Vec<Point2> = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let side = |p: Point2| (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        let inside = |p: Point2| side(p) >= 0.0;
        let cross = |p: Point2, q: Point2| {
            let t = side(p) / (side(p) - side(q));
            Point2::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
        };
        let input = std::mem::take(&mut output);
        for j in 0..input.len() {
            let p = input[j];
            let q = input[(j + 1) % input.len()];
            match (inside(p), inside(q)) {
                (true, true) => output.push(q),
                (true, false) => output.push(cross(p, q)),
                (false, true) => {
                    output.push(cross(p, q));
                    output.push(q);
                }
                (false, false) => {}
            }
        }
    }
    output
}

/// Intersection-over-union of two rotated boxes via polygon clipping.
pub fn rbox_iou(a: &RBox, b: &RBox) -> f64 {
    let inter = polygon_area(&clip_polygon(&a.corners(), &b.corners()));
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_of_axis_aligned_box_is_diagonal() {
        let g = rbox_to_gaussian(&RBox::new(0.0, 0.0, 4.0, 2.0, 0.0));
        assert_relative_eq!(g.sigma()[(0, 0)], 4.0, epsilon = 1e-12);
        assert_relative_eq!(g.sigma()[(1, 1)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(g.sigma()[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn quarter_turn_swaps_the_diagonal() {
        let g = rbox_to_gaussian(&RBox::new(0.0, 0.0, 4.0, 2.0, FRAC_PI_2));
        assert_relative_eq!(g.sigma()[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(g.sigma()[(1, 1)], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn isotropic_gaussian_maps_to_zero_angle() {
        let g = Gaussian2::new(Vector2::new(1.0, 2.0), Matrix2::new(4.0, 0.0, 0.0, 4.0)).unwrap();
        let r = gaussian_to_rbox(&g);
        assert_eq!(r.theta, 0.0);
        assert_relative_eq!(r.w, 4.0, epsilon = 1e-12);
        assert_relative_eq!(r.h, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn normalization_enforces_long_edge() {
        let r = RBox::new(0.0, 0.0, 2.0, 4.0, 0.3);
        assert!(r.w >= r.h);
        assert_relative_eq!(r.w, 4.0);
        assert_relative_eq!(r.theta, 0.3 - FRAC_PI_2, epsilon = 1e-12);
        assert!(r.theta >= -FRAC_PI_2 && r.theta < FRAC_PI_2);
    }

    #[test]
    fn non_spd_covariance_is_rejected() {
        let bad = Matrix2::new(1.0, 2.0, 2.0, 1.0); // det < 0
        assert!(Gaussian2::new(Vector2::zeros(), bad).is_err());
        let asym = Matrix2::new(1.0, 0.5, 0.0, 1.0);
        assert!(Gaussian2::new(Vector2::zeros(), asym).is_err());
    }

    #[test]
    fn identical_boxes_have_unit_iou() {
        let a = RBox::new(10.0, 20.0, 8.0, 3.0, 0.7);
        assert_relative_eq!(rbox_iou(&a, &a), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn disjoint_boxes_have_zero_iou() {
        let a = RBox::new(0.0, 0.0, 2.0, 1.0, 0.0);
        let b = RBox::new(10.0, 0.0, 2.0, 1.0, 0.4);
        assert_eq!(rbox_iou(&a, &b), 0.0);
    }

    #[test]
    fn axis_aligned_overlap_matches_hand_computation() {
        // unit squares offset by half a side: intersection 0.5, union 1.5
        let a = RBox::new(0.0, 0.0, 1.0, 1.0, 0.0);
        let b = RBox::new(0.5, 0.0, 1.0, 1.0, 0.0);
        assert_relative_eq!(rbox_iou(&a, &b), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn contains_distinguishes_boundary() {
        let r = RBox::new(0.0, 0.0, 4.0, 2.0, 0.0);
        let edge = Point2::new(2.0, 0.0);
        assert!(r.contains(edge, false));
        assert!(!r.contains(edge, true));
    }

    #[test]
    fn wrap_angle_half_open_interval() {
        assert_relative_eq!(wrap_angle(FRAC_PI_2), -FRAC_PI_2, epsilon = 1e-12);
        assert_relative_eq!(wrap_angle(-FRAC_PI_2), -FRAC_PI_2, epsilon = 1e-12);
        assert_relative_eq!(wrap_angle(PI), 0.0, epsilon = 1e-12);
        assert_relative_eq!(wrap_angle(0.4), 0.4, epsilon = 1e-12);
    }
}
