//! Candidate mask routing and prior-guided selection.
//!
//! Sparse images keep their externally produced candidate masks and the
//! best candidate per instance is picked by a weighted sum of five shape
//! and appearance metrics; dense images fall back to the watershed
//! cascade. Metric order is normative: center alignment, color
//! consistency, rectangularity, circularity, aspect ratio.

mod metrics;
mod select;

pub use metrics::{
    score_aspect_ratio, score_center_alignment, score_circularity, score_color_consistency,
    score_rectangularity, MetricScores,
};
pub use select::{select_best_mask, SelectionOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BinaryMask;

/// Default instance-count threshold for the candidate-mask branch.
pub const DEFAULT_N_THR: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoutingDecision {
    CandidateMask,
    Watershed,
}

/// Route an image by annotated instance count: sparse images (count up to
/// and including `n_thr`) use candidate masks, denser ones use watershed.
pub fn route_image(instance_count: usize, n_thr: usize) -> RoutingDecision {
    if instance_count <= n_thr {
        RoutingDecision::CandidateMask
    } else {
        RoutingDecision::Watershed
    }
}

/// One externally supplied candidate mask for an instance.
#[derive(Debug, Clone)]
pub struct MaskCandidate {
    pub mask: BinaryMask,
    pub instance_index: usize,
    pub source_tag: String,
}

/// Metric scale parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricParams {
    /// Center-alignment bandwidth as a fraction of the image diagonal.
    pub sigma_c_factor: f64,
    /// Color-consistency decay, in 8-bit channel units.
    pub lambda_color: f64,
    /// Aspect-ratio decay coefficient.
    pub k_ar: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            sigma_c_factor: 0.05,
            lambda_color: 30.0,
            k_ar: 1.0,
        }
    }
}

impl MetricParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_c_factor", self.sigma_c_factor),
            ("lambda_color", self.lambda_color),
            ("k_ar", self.k_ar),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Per-class metric weights and admissible aspect-ratio range.
///
/// Weights follow the normative metric order and may be negative to
/// penalize a property (a court is expected NOT to look circular).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassPrior {
    pub class_id: u32,
    pub weights: [f64; 5],
    pub ar_range: (f64, f64),
}

impl Default for ClassPrior {
    fn default() -> Self {
        Self {
            class_id: 0,
            weights: [1.0; 5],
            ar_range: (1.0, 5.0),
        }
    }
}

impl ClassPrior {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.ar_range;
        if !(lo.is_finite() && hi.is_finite() && 1.0 <= lo && lo <= hi) {
            return Err(Error::Domain(format!(
                "ar_range must satisfy 1 <= r_min <= r_max, got ({lo}, {hi})"
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Domain("non-finite prior weight".into()));
        }
        Ok(())
    }
}
