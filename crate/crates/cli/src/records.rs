use serde::{Deserialize, Serialize};

use pointlab::geometry::RBox;

/// Which label generator produced an image's boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    CandidateMask,
    Watershed,
}

/// One pseudo-labeled instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub gt_index: usize,
    pub point: [f64; 2],
    pub class_id: usize,
    pub class_name: String,
    pub rbox: RBox,
    /// Candidate tag that won the selection, or "watershed".
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric_values: Option<[f64; 5]>,
    pub degenerate: bool,
    /// Size-consistency loss of the fitted box against its own mask.
    pub size_loss: f64,
    /// IoU against a reference box, when the dataset supplies one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_iou: Option<f64>,
}

/// Per-image result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub branch: Branch,
    pub instances: Vec<InstanceRecord>,
    /// Mean instance size loss (zero when the image has no instances).
    pub size_loss: f64,
    /// Mean edge-alignment loss over non-degenerate instances.
    pub edge_loss: f64,
    /// Mutual-overlap penalty over the image's fitted Gaussians.
    pub overlap_loss: f64,
    /// Weighted sum of the three terms above.
    pub total_loss: f64,
    pub label_source: String,
    pub positives_per_gt: Vec<usize>,
}

/// An image the run could not label, with the reason it was skipped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageFailure {
    pub image_id: String,
    pub reason: String,
}

/// Run-level tallies. `images_total` always equals the three branch
/// counts summed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub images_total: usize,
    pub images_candidate_branch: usize,
    pub images_watershed_branch: usize,
    pub images_skipped: usize,
    pub instances_total: usize,
    pub degenerate_instances: usize,
    pub mean_size_loss_candidate: Option<f64>,
    pub mean_size_loss_watershed: Option<f64>,
    pub mean_edge_loss: Option<f64>,
    pub mean_overlap_loss: Option<f64>,
    pub positives_total: usize,
    pub gts_with_positives: usize,
    pub gts_total: usize,
}

/// Everything a run writes, in one document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutput {
    pub records: Vec<ImageRecord>,
    pub failures: Vec<ImageFailure>,
    pub summary: Summary,
}

fn mean_of(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

pub fn compute_summary(records: &[ImageRecord], failures: &[ImageFailure]) -> Summary {
    let mut candidate_sizes = Vec::new();
    let mut watershed_sizes = Vec::new();
    let mut edges = Vec::new();
    let mut overlaps = Vec::new();
    let mut instances_total = 0;
    let mut degenerate = 0;
    let mut positives_total = 0;
    let mut gts_with_positives = 0;
    let mut gts_total = 0;
    let mut candidate_images = 0;
    let mut watershed_images = 0;
    for rec in records {
        match rec.branch {
            Branch::CandidateMask => {
                candidate_images += 1;
                candidate_sizes.push(rec.size_loss);
            }
            Branch::Watershed => {
                watershed_images += 1;
                watershed_sizes.push(rec.size_loss);
            }
        }
        edges.push(rec.edge_loss);
        overlaps.push(rec.overlap_loss);
        instances_total += rec.instances.len();
        degenerate += rec.instances.iter().filter(|i| i.degenerate).count();
        positives_total += rec.positives_per_gt.iter().sum::<usize>();
        gts_with_positives += rec.positives_per_gt.iter().filter(|&&n| n > 0).count();
        gts_total += rec.positives_per_gt.len();
    }
    Summary {
        images_total: records.len() + failures.len(),
        images_candidate_branch: candidate_images,
        images_watershed_branch: watershed_images,
        images_skipped: failures.len(),
        instances_total,
        degenerate_instances: degenerate,
        mean_size_loss_candidate: mean_of(&candidate_sizes),
        mean_size_loss_watershed: mean_of(&watershed_sizes),
        mean_edge_loss: mean_of(&edges),
        mean_overlap_loss: mean_of(&overlaps),
        positives_total,
        gts_with_positives,
        gts_total,
    }
}

/// Serialize with a trailing newline; struct field order is fixed, so the
/// same data always produces the same bytes.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("record types serialize");
    bytes.push(b'\n');
    bytes
}
