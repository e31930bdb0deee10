use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::geometry::Gaussian2;
use crate::losses::{gwd_loss, smooth_l1};

use std::f64::consts::PI;

/// Similarity transform applied to an augmented view: rotation, optional
/// horizontal mirror, uniform scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentTransform {
    pub rotation: f64,
    pub flip: bool,
    pub scale: f64,
}

impl AugmentTransform {
    pub fn new(rotation: f64, flip: bool, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!(
                "augment scale must be positive, got {scale}"
            )));
        }
        Ok(Self {
            rotation,
            flip,
            scale,
        })
    }

    /// `+1` for no mirror, `-1` for a mirrored view; multiplies angles.
    pub fn flip_sign(&self) -> f64 {
        if self.flip {
            -1.0
        } else {
            1.0
        }
    }

    /// Linear part: `scale * R(rotation) * F`, determinant `+-scale^2`.
    pub fn linear(&self) -> Matrix2<f64> {
        let (s, c) = self.rotation.sin_cos();
        let rot = Matrix2::new(c, -s, s, c);
        let f = if self.flip {
            Matrix2::new(-1.0, 0.0, 0.0, 1.0)
        } else {
            Matrix2::identity()
        };
        self.scale * rot * f
    }
}

/// Wrap an angle difference into `(-pi/2, pi/2]`.
fn wrap_half_open_diff(d: f64) -> f64 {
    d - PI * (d / PI - 0.5).ceil()
}

/// Self-supervision consistency between an original view and an augmented
/// view of the same instance.
///
/// Covariance term: Wasserstein loss between the transformed original
/// covariance `A S A^T` and the augmented covariance. Angle term: smooth L1
/// (beta 1) on the angle residual `flip_sign * theta + rotation -
/// theta_aug`, wrapped to the half-open interval so the pair of box
/// conventions cannot inflate the loss.
pub fn consistency_loss(
    sigma: Matrix2<f64>,
    theta: f64,
    sigma_aug: Matrix2<f64>,
    theta_aug: f64,
    t: &AugmentTransform,
) -> Result<f64> {
    let a = t.linear();
    let mapped = a * sigma * a.transpose();
    let g1 = Gaussian2::new(Vector2::zeros(), mapped)?;
    let g2 = Gaussian2::new(Vector2::zeros(), sigma_aug)?;
    let angle_residual = wrap_half_open_diff(t.flip_sign() * theta + t.rotation - theta_aug);
    Ok(gwd_loss(&g1, &g2) + smooth_l1(angle_residual, 0.0, 1.0))
}
