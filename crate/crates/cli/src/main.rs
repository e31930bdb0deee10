use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pointlab::assign::{pla, LabelSource};
use pointlab::geometry::{AnnotatedPoint, Gaussian2, InstanceRegions, RBox};
use pointlab::losses::{bhattacharyya_coeff, gaussian_overlap_loss, gwd_distance_sq, gwd_loss};
use pointlab::maskselect::select_best_mask;
use pointlab::raster::ColorImage;
use pointlab::watershed::{
    basins_to_pseudo_rboxes, class_specific_watershed, point_seeded_watershed, voronoi_partition,
};

use pointlab_cli::annotations::parse_point_annotations;
use pointlab_cli::config::RunConfig;
use pointlab_cli::dataset;
use pointlab_cli::dota::{export_dota, DotaRecord};
use pointlab_cli::manifest::load_manifest;
use pointlab_cli::overlay::{load_color_image, render_overlay, save_png};
use pointlab_cli::pipeline::{run_pipeline, PipelineOptions};
use pointlab_cli::predgrid::read_predictions;
use pointlab_cli::records::RunOutput;

#[derive(Parser)]
#[command(name = "pointlab", version, about = "Pseudo rotated-box labels from point annotations")]
struct Cli {
    /// Config file; falls back to $POINTLAB_CONFIG, then defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the single-image utility commands.
#[derive(Args)]
struct ImageInput {
    /// Input raster (8-bit gray or RGB).
    #[arg(long)]
    image: PathBuf,
    /// Per-image annotation file ("x y class" or DOTA polygon lines).
    #[arg(long)]
    annotations: PathBuf,
    /// Comma-separated class table, e.g. "plane,ship".
    #[arg(long, value_delimiter = ',')]
    classes: Vec<String>,
}

impl ImageInput {
    fn load(&self) -> Result<(ColorImage, Vec<AnnotatedPoint>)> {
        let image = load_color_image(&self.image)?;
        let text = std::fs::read_to_string(&self.annotations)
            .with_context(|| format!("reading {}", self.annotations.display()))?;
        if self.classes.is_empty() {
            bail!("--classes must list at least one class name");
        }
        let points = parse_point_annotations(&text, &self.classes)?;
        Ok((image, points))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pseudo-label pipeline over a dataset index.
    GenPseudo {
        /// Dataset index TOML.
        #[arg(long)]
        index: PathBuf,
        /// Output directory for records, summary, and DOTA files.
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write per-image overlay renderings.
        #[arg(long)]
        overlays: bool,
        /// Override the configured training epoch.
        #[arg(long)]
        epoch: Option<usize>,
        /// Override the candidate-branch instance threshold.
        #[arg(long)]
        n_thr: Option<usize>,
        /// Run the watershed once per class.
        #[arg(long)]
        class_specific: bool,
        /// Worker threads (0 = machine default).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Rasterize the nearest-point partition of the annotations.
    Voronoi {
        #[command(flatten)]
        input: ImageInput,
        /// Output label rendering (PNG).
        #[arg(long)]
        out: PathBuf,
    },
    /// Point-seeded watershed; writes an overlay and prints the boxes.
    Watershed {
        #[command(flatten)]
        input: ImageInput,
        /// Output overlay rendering (PNG).
        #[arg(long)]
        out: PathBuf,
    },
    /// Score candidate masks for each instance and print the winners.
    SelectMask {
        #[command(flatten)]
        input: ImageInput,
        /// Candidate manifest TOML.
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Assign pseudo labels to pyramid anchors and print per-gt counts.
    Assign {
        #[command(flatten)]
        input: ImageInput,
        /// Prediction grids (text or binary), required once the epoch
        /// reaches the switch.
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Override the configured training epoch.
        #[arg(long)]
        epoch: Option<usize>,
    },
    /// Print the Gaussian distances between two boxes "cx cy w h theta".
    EvalLoss {
        #[arg(long, num_args = 5, value_names = ["CX", "CY", "W", "H", "THETA"])]
        a: Vec<f64>,
        #[arg(long, num_args = 5, value_names = ["CX", "CY", "W", "H", "THETA"])]
        b: Vec<f64>,
    },
    /// Re-export DOTA text files from a records.json document.
    ExportDota {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn label_rendering(image: &ColorImage, regions: &InstanceRegions) -> ColorImage {
    render_overlay(image, Some(regions), &[], &[])
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = RunConfig::resolve(cli.config.as_deref())?;
    match cli.command {
        Command::GenPseudo {
            index,
            out_dir,
            overlays,
            epoch,
            n_thr,
            class_specific,
            workers,
        } => {
            if let Some(e) = epoch {
                cfg.epoch = e;
            }
            if let Some(n) = n_thr {
                cfg.n_thr = n;
            }
            if class_specific {
                cfg.class_specific = true;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let index = dataset::load(&index)?;
            let opts = PipelineOptions { out_dir, overlays };
            let outcome = run_pipeline(&index, &cfg, &opts)?;
            let s = &outcome.output.summary;
            eprintln!(
                "{} images: {} candidate, {} watershed, {} skipped",
                s.images_total,
                s.images_candidate_branch,
                s.images_watershed_branch,
                s.images_skipped
            );
            for f in &outcome.output.failures {
                eprintln!("skipped {}: {}", f.image_id, f.reason);
            }
            Ok(if outcome.failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Voronoi { input, out } => {
            let (image, points) = input.load()?;
            let labels = voronoi_partition(&points, image.width(), image.height())?;
            let regions = InstanceRegions::from_label_map(&labels, points.len());
            save_png(&out, &label_rendering(&image, &regions))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Watershed { input, out } => {
            let (image, points) = input.load()?;
            let gray = image.to_gray();
            let regions = if cfg.class_specific {
                class_specific_watershed(&gray, &points, &cfg.watershed)?
            } else {
                let labels = point_seeded_watershed(&gray, &points, &cfg.watershed)?;
                InstanceRegions::from_label_map(&labels, points.len())
            };
            let boxes = basins_to_pseudo_rboxes(&regions)?;
            let rboxes: Vec<RBox> = boxes.iter().map(|b| b.rbox).collect();
            save_png(&out, &render_overlay(&image, Some(&regions), &rboxes, &points))?;
            println!("{}", serde_json::to_string_pretty(&boxes)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::SelectMask { input, manifest } => {
            let (image, points) = input.load()?;
            let instances = load_manifest(&manifest, image.width(), image.height())?;
            let mut out = Vec::new();
            for inst in &instances {
                if inst.instance_index >= points.len() {
                    bail!("manifest instance {} has no annotation", inst.instance_index);
                }
                let point = &points[inst.instance_index];
                let prior = cfg.prior_for(point.class_id as u32);
                let won = select_best_mask(
                    &inst.candidates,
                    point.point,
                    &image,
                    &prior,
                    &cfg.metric_params,
                )?;
                out.push(serde_json::json!({
                    "instance": inst.instance_index,
                    "winner": inst.candidates[won.index].source_tag,
                    "score": won.score,
                    "metrics": won.scores.values,
                }));
            }
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Assign {
            input,
            predictions,
            epoch,
        } => {
            let (image, points) = input.load()?;
            if let Some(e) = epoch {
                cfg.epoch = e;
            }
            let preds = predictions.as_deref().map(read_predictions).transpose()?;
            let gray = image.to_gray();
            let (assignment, pls) = pla(
                cfg.epoch,
                cfg.switch_epoch,
                &gray,
                &points,
                preds.as_deref(),
                &cfg.watershed,
                &cfg.levels,
            )?;
            let source = match pls.first().map(|p| p.source) {
                Some(LabelSource::DynamicPhase) => "dynamic_phase",
                _ => "watershed_phase",
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "label_source": source,
                    "positives_per_gt": assignment.positives_per_gt,
                }))?
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::EvalLoss { a, b } => {
            let parse = |v: &[f64]| RBox::new(v[0], v[1], v[2], v[3], v[4]);
            let (ba, bb) = (parse(&a), parse(&b));
            let ga: Gaussian2 = pointlab::geometry::rbox_to_gaussian(&ba);
            let gb: Gaussian2 = pointlab::geometry::rbox_to_gaussian(&bb);
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "gwd_distance_sq": gwd_distance_sq(&ga, &gb),
                    "gwd_loss": gwd_loss(&ga, &gb),
                    "bhattacharyya": bhattacharyya_coeff(&ga, &gb),
                    "overlap_loss": gaussian_overlap_loss(&[ga, gb]),
                }))?
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportDota { records, out_dir } => {
            let text = std::fs::read_to_string(&records)
                .with_context(|| format!("reading {}", records.display()))?;
            let doc: RunOutput = serde_json::from_str(&text)?;
            std::fs::create_dir_all(&out_dir)?;
            for rec in &doc.records {
                let rows: Vec<DotaRecord> = rec
                    .instances
                    .iter()
                    .map(|i| DotaRecord {
                        rbox: i.rbox,
                        class_name: i.class_name.clone(),
                        difficulty: 0,
                    })
                    .collect();
                std::fs::write(
                    out_dir.join(format!("{}.txt", rec.image_id)),
                    export_dota(&rows),
                )?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
