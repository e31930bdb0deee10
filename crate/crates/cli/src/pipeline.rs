use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use pointlab::assign::{pla, LabelSource, LevelPredictions};
use pointlab::geometry::{
    min_area_rect, rbox_iou, rbox_to_gaussian, AnnotatedPoint, InstanceRegions, Point2, RBox,
};
use pointlab::losses::{edge_loss, gaussian_overlap_loss, l_mask, l_pgdm, mask_regression_targets};
use pointlab::maskselect::{route_image, RoutingDecision};
use pointlab::raster::{gaussian_smooth, gradient_magnitude, ColorImage, GrayImage};
use pointlab::watershed::{basins_to_pseudo_rboxes, class_specific_watershed, point_seeded_watershed};

use crate::config::RunConfig;
use crate::dataset::{DatasetEntry, DatasetIndex};
use crate::dota::{export_dota, parse_dota_line, DotaRecord};
use crate::manifest::load_manifest;
use crate::overlay::{load_color_image, render_overlay, save_png};
use crate::predgrid::read_predictions;
use crate::records::{
    compute_summary, to_json_bytes, Branch, ImageFailure, ImageRecord, InstanceRecord, RunOutput,
};

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub out_dir: PathBuf,
    pub overlays: bool,
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub output: RunOutput,
    /// Count of images that were skipped; nonzero means a failing exit.
    pub failed: usize,
}

/// Fit a box to pixel centers, falling back to a flagged 1 x 1 box at the
/// centroid when the pixels cannot support a real rectangle.
fn fit_box(centers: &[Point2]) -> (RBox, bool) {
    if let Ok(rbox) = min_area_rect(centers) {
        if rbox.h > 0.0 {
            return (rbox, false);
        }
    }
    let n = centers.len().max(1) as f64;
    let (mut cx, mut cy) = (0.0, 0.0);
    for p in centers {
        cx += p.x;
        cy += p.y;
    }
    (RBox::new(cx / n, cy / n, 1.0, 1.0, 0.0), true)
}

/// Per-instance box + provenance, before losses are attached.
struct FittedInstance {
    rbox: RBox,
    degenerate: bool,
    source: String,
    selection_score: Option<f64>,
    metric_values: Option<[f64; 5]>,
    centers: Vec<Point2>,
}

fn watershed_branch(
    image: &GrayImage,
    points: &[AnnotatedPoint],
    cfg: &RunConfig,
) -> Result<(Vec<FittedInstance>, InstanceRegions)> {
    let regions = if cfg.class_specific {
        class_specific_watershed(image, points, &cfg.watershed)?
    } else {
        let labels = point_seeded_watershed(image, points, &cfg.watershed)?;
        InstanceRegions::from_label_map(&labels, points.len())
    };
    let boxes = basins_to_pseudo_rboxes(&regions)?;
    let fitted = boxes
        .iter()
        .enumerate()
        .map(|(k, b)| FittedInstance {
            rbox: b.rbox,
            degenerate: b.degenerate,
            source: "watershed".into(),
            selection_score: None,
            metric_values: None,
            centers: regions.centers(k),
        })
        .collect();
    Ok((fitted, regions))
}

fn candidate_branch(
    entry: &DatasetEntry,
    image: &ColorImage,
    points: &[AnnotatedPoint],
    cfg: &RunConfig,
) -> Result<(Vec<FittedInstance>, InstanceRegions)> {
    let manifest_path = entry
        .manifest
        .as_ref()
        .ok_or_else(|| anyhow!("routed to the candidate branch but no manifest is listed"))?;
    let instances = load_manifest(manifest_path, image.width(), image.height())?;
    for inst in &instances {
        if inst.instance_index >= points.len() {
            bail!(
                "manifest instance {} has no matching annotation (only {} points)",
                inst.instance_index,
                points.len()
            );
        }
    }
    let mut fitted = Vec::with_capacity(points.len());
    let mut regions: Vec<Vec<u32>> = Vec::with_capacity(points.len());
    for (k, point) in points.iter().enumerate() {
        let inst = instances
            .iter()
            .find(|i| i.instance_index == k)
            .ok_or_else(|| anyhow!("manifest lists no candidates for instance {k}"))?;
        let prior = cfg.prior_for(point.class_id as u32);
        let outcome = pointlab::maskselect::select_best_mask(
            &inst.candidates,
            point.point,
            image,
            &prior,
            &cfg.metric_params,
        )?;
        let mask = &inst.candidates[outcome.index].mask;
        let centers = mask.set_centers();
        let (rbox, degenerate) = fit_box(&centers);
        regions.push(mask.iter_set().map(|(x, y)| y * image.width() + x).collect());
        fitted.push(FittedInstance {
            rbox,
            degenerate,
            source: inst.candidates[outcome.index].source_tag.clone(),
            selection_score: Some(outcome.score),
            metric_values: Some(outcome.scores.values),
            centers,
        });
    }
    Ok((
        fitted,
        InstanceRegions::new(image.width(), image.height(), regions),
    ))
}

fn load_reference_boxes(path: &Path, expected: usize) -> Result<Vec<RBox>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading reference boxes {}", path.display()))?;
    let mut boxes = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty()
            || line.starts_with('#')
            || line.starts_with("imagesource:")
            || line.starts_with("gsd:")
        {
            continue;
        }
        let (corners, _, _) = parse_dota_line(line)?;
        boxes.push(min_area_rect(&corners)?);
    }
    if boxes.len() != expected {
        bail!(
            "reference file has {} boxes for {} annotations",
            boxes.len(),
            expected
        );
    }
    Ok(boxes)
}

fn process_entry(
    entry: &DatasetEntry,
    index: &DatasetIndex,
    cfg: &RunConfig,
    opts: &PipelineOptions,
) -> Result<ImageRecord> {
    let color = load_color_image(&entry.image)?;
    let gray = color.to_gray();
    let ann_text = std::fs::read_to_string(&entry.annotations)
        .with_context(|| format!("reading annotations {}", entry.annotations.display()))?;
    let points = crate::annotations::parse_point_annotations(&ann_text, &index.classes)?;
    if points.is_empty() {
        bail!("no annotated instances");
    }

    let branch = match route_image(points.len(), cfg.n_thr) {
        RoutingDecision::CandidateMask => Branch::CandidateMask,
        RoutingDecision::Watershed => Branch::Watershed,
    };
    let (fitted, regions) = match branch {
        Branch::Watershed => watershed_branch(&gray, &points, cfg)?,
        Branch::CandidateMask => candidate_branch(entry, &color, &points, cfg)?,
    };

    let references = entry
        .reference
        .as_ref()
        .map(|p| load_reference_boxes(p, points.len()))
        .transpose()?;

    let edge_map = gradient_magnitude(&gaussian_smooth(
        &gray,
        cfg.watershed.smoothing_at(gray.width(), gray.height()),
    ));
    let mut instances = Vec::with_capacity(fitted.len());
    let mut size_losses = Vec::new();
    let mut edge_losses = Vec::new();
    let mut gaussians = Vec::with_capacity(fitted.len());
    for (k, inst) in fitted.iter().enumerate() {
        let size_loss = if inst.degenerate {
            0.0
        } else {
            let t = mask_regression_targets(&inst.centers, inst.rbox.center(), inst.rbox.theta)?;
            l_mask(inst.rbox.w, inst.rbox.h, &t)?
        };
        size_losses.push(size_loss);
        if !inst.degenerate {
            edge_losses.push(edge_loss(&edge_map, &inst.rbox, 1.0)?);
        }
        gaussians.push(rbox_to_gaussian(&inst.rbox));
        instances.push(InstanceRecord {
            gt_index: k,
            point: [points[k].point.x, points[k].point.y],
            class_id: points[k].class_id,
            class_name: index.classes[points[k].class_id].clone(),
            rbox: inst.rbox,
            source: inst.source.clone(),
            selection_score: inst.selection_score,
            metric_values: inst.metric_values,
            degenerate: inst.degenerate,
            size_loss,
            reference_iou: references
                .as_ref()
                .map(|refs| rbox_iou(&inst.rbox, &refs[k])),
        });
    }
    let size_mean = l_pgdm(&size_losses);
    let edge_mean = l_pgdm(&edge_losses);
    let overlap = gaussian_overlap_loss(&gaussians);
    let w = &cfg.loss_weights;
    let total = w.pgdm * size_mean + w.edge * edge_mean + w.overlap * overlap;

    let preds: Option<Vec<LevelPredictions>> = entry
        .predictions
        .as_ref()
        .map(|p| read_predictions(p))
        .transpose()?;
    let (assignment, pls) = pla(
        cfg.epoch,
        cfg.switch_epoch,
        &gray,
        &points,
        preds.as_deref(),
        &cfg.watershed,
        &cfg.levels,
    )?;
    let label_source = match pls.first().map(|p| p.source) {
        Some(LabelSource::DynamicPhase) => "dynamic_phase",
        _ => "watershed_phase",
    };

    if opts.overlays {
        let boxes: Vec<RBox> = fitted.iter().map(|f| f.rbox).collect();
        let rendered = render_overlay(&color, Some(&regions), &boxes, &points);
        let dir = opts.out_dir.join("overlays");
        std::fs::create_dir_all(&dir)?;
        save_png(&dir.join(format!("{}.png", entry.id)), &rendered)?;
    }

    Ok(ImageRecord {
        image_id: entry.id.clone(),
        width: color.width(),
        height: color.height(),
        branch,
        instances,
        size_loss: size_mean,
        edge_loss: edge_mean,
        overlap_loss: overlap,
        total_loss: total,
        label_source: label_source.into(),
        positives_per_gt: assignment.positives_per_gt,
    })
}

fn write_dota_files(out_dir: &Path, records: &[ImageRecord]) -> Result<()> {
    let dir = out_dir.join("dota");
    std::fs::create_dir_all(&dir)?;
    for rec in records {
        let rows: Vec<DotaRecord> = rec
            .instances
            .iter()
            .map(|i| DotaRecord {
                rbox: i.rbox,
                class_name: i.class_name.clone(),
                difficulty: 0,
            })
            .collect();
        std::fs::write(dir.join(format!("{}.txt", rec.image_id)), export_dota(&rows))?;
    }
    Ok(())
}

/// Label every image in the index and write records, a summary, and DOTA
/// exports under `opts.out_dir`. Per-image failures are collected, never
/// fatal; the outcome reports how many there were.
pub fn run_pipeline(
    index: &DatasetIndex,
    cfg: &RunConfig,
    opts: &PipelineOptions,
) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .context("building worker pool")?;
    let results: Vec<(String, Result<ImageRecord>)> = pool.install(|| {
        index
            .entries
            .par_iter()
            .map(|entry| (entry.id.clone(), process_entry(entry, index, cfg, opts)))
            .collect()
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (id, result) in results {
        match result {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(ImageFailure {
                image_id: id,
                reason: format!("{e:#}"),
            }),
        }
    }
    records.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    failures.sort_by(|a, b| a.image_id.cmp(&b.image_id));

    let summary = compute_summary(&records, &failures);
    let output = RunOutput {
        records,
        failures,
        summary,
    };
    std::fs::create_dir_all(&opts.out_dir)?;
    std::fs::write(opts.out_dir.join("records.json"), to_json_bytes(&output))?;
    std::fs::write(
        opts.out_dir.join("summary.json"),
        to_json_bytes(&output.summary),
    )?;
    write_dota_files(&opts.out_dir, &output.records)?;
    let failed = output.failures.len();
    Ok(PipelineOutcome { output, failed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset;
    use image::{Rgb, RgbImage};
    use std::fs;

    /// Paint a filled axis-aligned rectangle onto an RGB image.
    fn paint(img: &mut RgbImage, x0: u32, y0: u32, w: u32, h: u32, color: [u8; 3]) {
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                img.put_pixel(x, y, Rgb(color));
            }
        }
    }

    fn write_mask_png(path: &Path, w: u32, h: u32, x0: u32, y0: u32, rw: u32, rh: u32) {
        let mut img = image::GrayImage::new(w, h);
        for y in y0..y0 + rh {
            for x in x0..x0 + rw {
                img.put_pixel(x, y, image::Luma([255u8]));
            }
        }
        img.save(path).unwrap();
    }

    /// Two-image dataset: one sparse image with a manifest, one dense.
    fn build_dataset(root: &Path) -> PathBuf {
        fs::create_dir_all(root.join("masks")).unwrap();

        // sparse: two bright rectangles on black, 2 instances <= n_thr
        let mut sparse = RgbImage::from_pixel(96, 96, Rgb([235, 235, 235]));
        paint(&mut sparse, 10, 20, 30, 14, [40, 40, 200]);
        paint(&mut sparse, 55, 55, 20, 26, [200, 40, 40]);
        sparse.save(root.join("sparse.png")).unwrap();
        fs::write(root.join("sparse.txt"), "25 27 plane\n65 68 ship\n").unwrap();
        write_mask_png(&root.join("masks/i0_good.png"), 96, 96, 10, 20, 30, 14);
        write_mask_png(&root.join("masks/i0_big.png"), 96, 96, 5, 10, 60, 40);
        write_mask_png(&root.join("masks/i1_good.png"), 96, 96, 55, 55, 20, 26);
        fs::write(
            root.join("sparse_manifest.toml"),
            r#"
            [[instances]]
            index = 0
            x = 25.0
            y = 27.0
            class_id = 0
            masks = ["masks/i0_good.png", "masks/i0_big.png"]

            [[instances]]
            index = 1
            x = 65.0
            y = 68.0
            class_id = 1
            masks = ["masks/i1_good.png"]
            "#,
        )
        .unwrap();

        // dense: five dark rectangles on white, 5 > n_thr
        let mut dense = RgbImage::from_pixel(128, 128, Rgb([240, 240, 240]));
        let rects = [
            (8u32, 8u32, 24u32, 12u32),
            (70, 10, 30, 16),
            (12, 60, 20, 22),
            (64, 66, 34, 14),
            (40, 100, 28, 12),
        ];
        let mut ann = String::new();
        for &(x0, y0, w, h) in &rects {
            paint(&mut dense, x0, y0, w, h, [50, 50, 50]);
            ann.push_str(&format!(
                "{} {} plane\n",
                x0 as f64 + w as f64 / 2.0,
                y0 as f64 + h as f64 / 2.0
            ));
        }
        dense.save(root.join("dense.png")).unwrap();
        fs::write(root.join("dense.txt"), ann).unwrap();

        let index_path = root.join("index.toml");
        fs::write(
            &index_path,
            r#"
            classes = ["plane", "ship"]

            [[entries]]
            image = "sparse.png"
            annotations = "sparse.txt"
            manifest = "sparse_manifest.toml"

            [[entries]]
            image = "dense.png"
            annotations = "dense.txt"
            "#,
        )
        .unwrap();
        index_path
    }

    #[test]
    fn mixed_dataset_routes_and_labels_both_branches() {
        let dir = tempfile::tempdir().unwrap();
        let index_path = build_dataset(dir.path());
        let index = dataset::load(&index_path).unwrap();
        let cfg = RunConfig::default();
        let opts = PipelineOptions {
            out_dir: dir.path().join("out"),
            overlays: false,
        };
        let outcome = run_pipeline(&index, &cfg, &opts).unwrap();
        assert_eq!(outcome.failed, 0);
        let out = &outcome.output;
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.summary.images_candidate_branch, 1);
        assert_eq!(out.summary.images_watershed_branch, 1);

        // records come back sorted by id: dense first
        let dense = &out.records[0];
        assert_eq!(dense.image_id, "dense");
        assert_eq!(dense.branch, Branch::Watershed);
        assert_eq!(dense.instances.len(), 5);
        for inst in &dense.instances {
            assert!(!inst.degenerate);
            assert!(inst.size_loss < 1e-9, "self-fit loss {}", inst.size_loss);
        }

        let sparse = &out.records[1];
        assert_eq!(sparse.branch, Branch::CandidateMask);
        assert_eq!(sparse.instances[0].source, "masks/i0_good.png");
        assert_eq!(sparse.instances[1].source, "masks/i1_good.png");
        // tight rect mask refits to the painted rectangle
        let b = &sparse.instances[0].rbox;
        assert!((b.cx - 25.0).abs() < 0.75 && (b.cy - 27.0).abs() < 0.75);

        assert!(opts.out_dir.join("records.json").exists());
        assert!(opts.out_dir.join("summary.json").exists());
        assert!(opts.out_dir.join("dota/dense.txt").exists());
        let dota = fs::read_to_string(opts.out_dir.join("dota/sparse.txt")).unwrap();
        assert_eq!(dota.lines().count(), 2);
        assert!(dota.lines().next().unwrap().ends_with("plane 0"));
    }

    #[test]
    fn rerun_is_byte_identical_and_shuffle_invariant() {
        let dir = tempfile::tempdir().unwrap();
        let index_path = build_dataset(dir.path());
        let mut index = dataset::load(&index_path).unwrap();
        let cfg = RunConfig::default();
        let out_a = PipelineOptions {
            out_dir: dir.path().join("a"),
            overlays: false,
        };
        run_pipeline(&index, &cfg, &out_a).unwrap();
        index.entries.reverse();
        let out_b = PipelineOptions {
            out_dir: dir.path().join("b"),
            overlays: false,
        };
        run_pipeline(&index, &cfg, &out_b).unwrap();
        for name in ["records.json", "summary.json", "dota/sparse.txt", "dota/dense.txt"] {
            let a = fs::read(out_a.out_dir.join(name)).unwrap();
            let b = fs::read(out_b.out_dir.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs");
        }
    }

    #[test]
    fn missing_manifest_is_isolated_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let index_path = build_dataset(dir.path());
        // rewrite the index without the manifest line
        fs::write(
            &index_path,
            r#"
            classes = ["plane", "ship"]

            [[entries]]
            image = "sparse.png"
            annotations = "sparse.txt"

            [[entries]]
            image = "dense.png"
            annotations = "dense.txt"
            "#,
        )
        .unwrap();
        let index = dataset::load(&index_path).unwrap();
        let cfg = RunConfig::default();
        let opts = PipelineOptions {
            out_dir: dir.path().join("out"),
            overlays: false,
        };
        let outcome = run_pipeline(&index, &cfg, &opts).unwrap();
        assert_eq!(outcome.failed, 1);
        assert_eq!(outcome.output.records.len(), 1);
        assert_eq!(outcome.output.failures.len(), 1);
        assert_eq!(outcome.output.failures[0].image_id, "sparse");
        assert!(outcome.output.failures[0].reason.contains("manifest"));
        let s = &outcome.output.summary;
        assert_eq!(
            s.images_total,
            s.images_candidate_branch + s.images_watershed_branch + s.images_skipped
        );
    }

    #[test]
    fn overlays_are_written_when_requested() {
        let dir = tempfile::tempdir().unwrap();
        let index_path = build_dataset(dir.path());
        let index = dataset::load(&index_path).unwrap();
        let cfg = RunConfig::default();
        let opts = PipelineOptions {
            out_dir: dir.path().join("out"),
            overlays: true,
        };
        run_pipeline(&index, &cfg, &opts).unwrap();
        assert!(opts.out_dir.join("overlays/sparse.png").exists());
        assert!(opts.out_dir.join("overlays/dense.png").exists());
    }
}
