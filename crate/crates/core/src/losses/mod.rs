//! Geometric losses over rotated boxes modeled as 2-D Gaussians.
//!
//! All distances have exact 2x2 closed forms; nothing here iterates, so
//! the values are reproducible to the last bit.

mod consistency;
mod edge;

pub use consistency::{consistency_loss, AugmentTransform};
pub use edge::{edge_loss, edge_targets};

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Gaussian2, Point2};

/// Weights for combining the loss terms in pipeline summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub pgdm: f64,
    pub overlap: f64,
    pub edge: f64,
    pub consistency: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            pgdm: 1.0,
            overlap: 1.0,
            edge: 1.0,
            consistency: 1.0,
        }
    }
}

/// Width/height regression targets derived from mask pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionTarget {
    pub w_t: f64,
    pub h_t: f64,
}

/// Principal square root of a 2x2 SPD matrix:
/// `(S + sqrt(det S) I) / sqrt(Tr S + 2 sqrt(det S))`.
fn sqrt_spd(s: &Matrix2<f64>) -> Matrix2<f64> {
    let det_root = s.determinant().max(0.0).sqrt();
    let denom = (s.trace() + 2.0 * det_root).sqrt();
    (s + Matrix2::from_diagonal_element(det_root)) / denom
}

/// Squared 2-Wasserstein distance between two Gaussians.
///
/// `d^2 = |mu1 - mu2|^2 + Tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2})`.
/// The covariance part is evaluated in its factored (Procrustes) form
/// `|P - Q U|_F^2` with `P = S1^{1/2}`, `Q = S2^{1/2}` and `U` the polar
/// rotation of `Q P`: subtracting the factors entrywise keeps
/// near-identical inputs at ~0, where the expanded trace form cancels
/// down to noise of order `eps * Tr S`.
pub fn gwd_distance_sq(a: &Gaussian2, b: &Gaussian2) -> f64 {
    let dmu = a.mu() - b.mu();
    let p = sqrt_spd(&a.sigma());
    let q = sqrt_spd(&b.sigma());
    let c = q * p;
    // polar rotation maximizing Tr(U^T C); det C > 0 for SPD factors
    let r = (c[(0, 0)] + c[(1, 1)]).hypot(c[(1, 0)] - c[(0, 1)]);
    let (cos, sin) = ((c[(0, 0)] + c[(1, 1)]) / r, (c[(1, 0)] - c[(0, 1)]) / r);
    let u = Matrix2::new(cos, -sin, sin, cos);
    dmu.norm_squared() + (p - q * u).norm_squared()
}

/// Log-squashed Wasserstein loss: `ln(1 + sqrt(d^2))`.
pub fn gwd_loss(a: &Gaussian2, b: &Gaussian2) -> f64 {
    (1.0 + gwd_distance_sq(a, b).sqrt()).ln()
}

/// Bhattacharyya coefficient `exp(-D_B)` of two Gaussians.
pub fn bhattacharyya_coeff(a: &Gaussian2, b: &Gaussian2) -> f64 {
    let mean = 0.5 * (a.sigma() + b.sigma());
    let det_mean = mean.determinant();
    let inv = mean
        .try_inverse()
        .expect("mean of two SPD matrices is invertible");
    let dmu = a.mu() - b.mu();
    let mahal = 0.125 * (dmu.transpose() * inv * dmu)[(0, 0)];
    let log_term =
        0.5 * (det_mean / (a.sigma().determinant() * b.sigma().determinant()).sqrt()).ln();
    (-(mahal + log_term)).exp()
}

/// Mutual-overlap penalty of an instance set: mean Bhattacharyya
/// coefficient over ordered pairs `i != j`. Fewer than two instances
/// cannot overlap, so the loss is zero.
pub fn gaussian_overlap_loss(instances: &[Gaussian2]) -> f64 {
    let n = instances.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += bhattacharyya_coeff(&instances[i], &instances[j]);
            }
        }
    }
    sum / n as f64
}

/// Smooth L1 (Huber) with threshold `beta`.
pub fn smooth_l1(pred: f64, target: f64, beta: f64) -> f64 {
    assert!(beta > 0.0, "smooth_l1 beta must be positive");
    let d = (pred - target).abs();
    if d < beta {
        0.5 * d * d / beta
    } else {
        d - 0.5 * beta
    }
}

/// Box-size targets from mask pixels: twice the largest coordinate of the
/// pixels expressed in the frame centered at `center` and rotated by
/// `theta`, per axis.
pub fn mask_regression_targets(
    pixels: &[Point2],
    center: Point2,
    theta: f64,
) -> Result<RegressionTarget> {
    if pixels.is_empty() {
        return Err(Error::DegenerateInput(
            "mask_regression_targets needs at least one pixel".into(),
        ));
    }
    let (s, c) = theta.sin_cos();
    let (mut mx, mut my) = (0.0f64, 0.0f64);
    for p in pixels {
        let dx = p.x - center.x;
        let dy = p.y - center.y;
        mx = mx.max((c * dx + s * dy).abs());
        my = my.max((-s * dx + c * dy).abs());
    }
    Ok(RegressionTarget {
        w_t: 2.0 * mx,
        h_t: 2.0 * my,
    })
}

/// Size-only Wasserstein loss between a predicted box size and a mask
/// target: both become zero-mean Gaussians with diagonal covariance
/// `diag((w/2)^2, (h/2)^2)`.
pub fn l_mask(pred_w: f64, pred_h: f64, target: &RegressionTarget) -> Result<f64> {
    let diag = |w: f64, h: f64, what: &str| -> Result<Gaussian2> {
        if !(w > 0.0 && h > 0.0) {
            return Err(Error::Domain(format!(
                "{what} size must be positive, got {w} x {h}"
            )));
        }
        Gaussian2::new(
            Vector2::zeros(),
            Matrix2::new(0.25 * w * w, 0.0, 0.0, 0.25 * h * h),
        )
    };
    let p = diag(pred_w, pred_h, "predicted")?;
    let t = diag(target.w_t, target.h_t, "target")?;
    Ok(gwd_loss(&p, &t))
}

/// Mean of per-instance mask losses; an empty slice contributes nothing.
pub fn l_pgdm(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rbox_to_gaussian, RBox};
    use approx::assert_relative_eq;

    fn diag_gaussian(mu: (f64, f64), a: f64, b: f64) -> Gaussian2 {
        Gaussian2::new(Vector2::new(mu.0, mu.1), Matrix2::new(a, 0.0, 0.0, b)).unwrap()
    }

    #[test]
    fn wasserstein_of_swapped_diagonals() {
        let a = diag_gaussian((0.0, 0.0), 4.0, 1.0);
        let b = diag_gaussian((0.0, 0.0), 1.0, 4.0);
        assert_relative_eq!(gwd_distance_sq(&a, &b), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn factored_form_matches_expanded_trace_form() {
        // Away from the near-identical regime the textbook expansion
        // Tr(S1) + Tr(S2) - 2 sqrt(Tr(S1 S2) + 2 sqrt(det S1 det S2))
        // is well conditioned and must agree with the factored form.
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let boxes: Vec<RBox> = (0..2)
                .map(|_| {
                    let h = 1.0 + 40.0 * next();
                    RBox::new(
                        60.0 * next(),
                        60.0 * next(),
                        h * (1.1 + 3.0 * next()),
                        h,
                        std::f64::consts::PI * (next() - 0.5),
                    )
                })
                .collect();
            let a = rbox_to_gaussian(&boxes[0]);
            let b = rbox_to_gaussian(&boxes[1]);
            let (s1, s2) = (a.sigma(), b.sigma());
            let mix = ((s1 * s2).trace()
                + 2.0 * (s1.determinant() * s2.determinant()).sqrt())
            .sqrt();
            let expanded = (a.mu() - b.mu()).norm_squared()
                + (s1.trace() + s2.trace() - 2.0 * mix).max(0.0);
            assert_relative_eq!(
                gwd_distance_sq(&a, &b),
                expanded,
                max_relative = 1e-9,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn loss_squashes_to_one_at_e_minus_one() {
        let d = std::f64::consts::E - 1.0;
        let a = diag_gaussian((0.0, 0.0), 1.0, 1.0);
        let b = diag_gaussian((d, 0.0), 1.0, 1.0);
        assert_relative_eq!(gwd_loss(&a, &b), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_gaussians_are_zero_distance() {
        let g = rbox_to_gaussian(&RBox::new(3.0, 4.0, 6.0, 2.0, 0.5));
        assert!(gwd_distance_sq(&g, &g).abs() < 1e-9);
        assert!(gwd_loss(&g, &g).abs() < 1e-9);
    }

    #[test]
    fn bhattacharyya_same_mean_different_scale() {
        let a = diag_gaussian((0.0, 0.0), 4.0, 4.0);
        let b = diag_gaussian((0.0, 0.0), 1.0, 1.0);
        // D_B = 0.5 ln(det(2.5 I)/sqrt(16*1)) = 0.5 ln(6.25/4)
        let expect = (-0.5f64 * (6.25f64 / 4.0).ln()).exp();
        assert_relative_eq!(bhattacharyya_coeff(&a, &b), expect, epsilon = 1e-12);
    }

    #[test]
    fn bhattacharyya_equal_unit_gaussians_separated() {
        // equal unit covariances: coefficient reduces to exp(-|d|^2 / 8)
        for k in 0..5 {
            let d = k as f64 * 0.75;
            let a = diag_gaussian((0.0, 0.0), 1.0, 1.0);
            let b = diag_gaussian((d, 0.0), 1.0, 1.0);
            assert_relative_eq!(
                bhattacharyya_coeff(&a, &b),
                (-d * d / 8.0).exp(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn overlap_of_identical_pair_is_one() {
        let g = diag_gaussian((1.0, 1.0), 2.0, 1.0);
        assert_relative_eq!(gaussian_overlap_loss(&[g, g]), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn overlap_of_single_instance_is_zero() {
        let g = diag_gaussian((1.0, 1.0), 2.0, 1.0);
        assert_eq!(gaussian_overlap_loss(&[g]), 0.0);
        assert_eq!(gaussian_overlap_loss(&[]), 0.0);
    }

    #[test]
    fn far_apart_instances_overlap_vanishes() {
        let a = diag_gaussian((0.0, 0.0), 2.0, 1.0);
        let b = diag_gaussian((500.0, 0.0), 2.0, 1.0);
        assert!(gaussian_overlap_loss(&[a, b]) < 1e-12);
    }

    #[test]
    fn smooth_l1_branches() {
        assert_relative_eq!(smooth_l1(0.5, 0.0, 1.0), 0.125, epsilon = 1e-12);
        assert_relative_eq!(smooth_l1(2.0, 0.0, 1.0), 1.5, epsilon = 1e-12);
        assert_eq!(smooth_l1(3.0, 3.0, 1.0), 0.0);
        // continuous at the threshold
        assert_relative_eq!(smooth_l1(1.0, 0.0, 1.0), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn targets_of_axis_aligned_rectangle_pixels() {
        // pixel centers of a 4 x 2 block around (2, 1)
        let mut pts = Vec::new();
        for y in 0..2 {
            for x in 0..4 {
                pts.push(Point2::new(x as f64 + 0.5, y as f64 + 0.5));
            }
        }
        let t = mask_regression_targets(&pts, Point2::new(2.0, 1.0), 0.0).unwrap();
        assert_relative_eq!(t.w_t, 3.0, epsilon = 1e-12);
        assert_relative_eq!(t.h_t, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rotated_frame_targets_match_box() {
        // corners of a 6 x 2 box rotated by 0.4 are recovered exactly
        let rb = RBox::new(5.0, 5.0, 6.0, 2.0, 0.4);
        let t =
            mask_regression_targets(&rb.corners().to_vec(), rb.center(), rb.theta).unwrap();
        assert_relative_eq!(t.w_t, 6.0, epsilon = 1e-12);
        assert_relative_eq!(t.h_t, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn l_mask_of_swapped_sizes() {
        let t = RegressionTarget { w_t: 2.0, h_t: 4.0 };
        let v = l_mask(4.0, 2.0, &t).unwrap();
        assert_relative_eq!(v, (1.0 + 2.0f64.sqrt()).ln(), epsilon = 1e-12);
        assert!(l_mask(4.0, 2.0, &RegressionTarget { w_t: 4.0, h_t: 2.0 }).unwrap() < 1e-12);
    }

    #[test]
    fn pgdm_mean_and_empty_case() {
        assert_eq!(l_pgdm(&[]), 0.0);
        assert_relative_eq!(l_pgdm(&[1.0, 2.0, 3.0]), 2.0, epsilon = 1e-12);
    }
}
