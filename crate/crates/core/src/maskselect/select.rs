use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::maskselect::{ClassPrior, MaskCandidate, MetricParams, MetricScores};
use crate::raster::ColorImage;

/// Winner of a candidate pool for one instance.
#[derive(Debug, Clone, Copy)]
pub struct SelectionOutcome {
    pub index: usize,
    pub score: f64,
    pub scores: MetricScores,
}

/// Pick the candidate maximizing the prior-weighted metric sum.
///
/// Exact score ties go to the lowest candidate index, so the outcome is a
/// deterministic function of the candidate list.
pub fn select_best_mask(
    candidates: &[MaskCandidate],
    prompt: Point2,
    image: &ColorImage,
    prior: &ClassPrior,
    p: &MetricParams,
) -> Result<SelectionOutcome> {
    if candidates.is_empty() {
        return Err(Error::DegenerateInput("no candidate masks".into()));
    }
    p.validate()?;
    prior.validate()?;
    let mut best: Option<SelectionOutcome> = None;
    for (index, cand) in candidates.iter().enumerate() {
        if cand.mask.area() == 0 {
            return Err(Error::DegenerateInput(format!(
                "candidate {index} has an empty mask"
            )));
        }
        if (cand.mask.width(), cand.mask.height()) != (image.width(), image.height()) {
            return Err(Error::Dimension(format!(
                "candidate {index} is {}x{}, image is {}x{}",
                cand.mask.width(),
                cand.mask.height(),
                image.width(),
                image.height()
            )));
        }
        let scores = MetricScores::compute(image, &cand.mask, prompt, prior, p);
        let score = scores.total(&prior.weights);
        let better = match &best {
            None => true,
            Some(b) => score > b.score,
        };
        if better {
            best = Some(SelectionOutcome {
                index,
                score,
                scores,
            });
        }
    }
    Ok(best.expect("non-empty candidate list"))
}
