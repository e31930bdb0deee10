use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use pointlab::geometry::{BinaryMask, Point2};
use pointlab::maskselect::MaskCandidate;

/// One instance's candidate pool from a manifest file.
#[derive(Debug)]
pub struct ManifestInstance {
    pub instance_index: usize,
    pub prompt: Point2,
    pub class_id: u32,
    pub candidates: Vec<MaskCandidate>,
}

#[derive(Deserialize)]
struct RawManifest {
    #[serde(default)]
    instances: Vec<RawInstance>,
}

#[derive(Deserialize)]
struct RawInstance {
    index: usize,
    x: f64,
    y: f64,
    class_id: u32,
    masks: Vec<String>,
}

/// Read a bilevel single-channel mask image; any nonzero value is set.
pub fn load_mask(path: &Path, width: u32, height: u32) -> Result<BinaryMask> {
    let img = image::open(path)
        .with_context(|| format!("reading mask {}", path.display()))?
        .into_luma8();
    if img.dimensions() != (width, height) {
        bail!(
            "mask {} is {}x{}, image is {width}x{height}",
            path.display(),
            img.width(),
            img.height()
        );
    }
    let mut mask = BinaryMask::new(width, height);
    for (x, y, px) in img.enumerate_pixels() {
        if px.0[0] > 0 {
            mask.set(x, y, true);
        }
    }
    Ok(mask)
}

/// Load a candidate manifest; mask paths resolve against the manifest's
/// directory and every mask must match the source image dimensions.
pub fn load_manifest(path: &Path, width: u32, height: u32) -> Result<Vec<ManifestInstance>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading manifest {}", path.display()))?;
    let raw: RawManifest =
        toml::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::with_capacity(raw.instances.len());
    for inst in raw.instances {
        if inst.masks.is_empty() {
            bail!("instance {} lists no candidate masks", inst.index);
        }
        let mut candidates = Vec::with_capacity(inst.masks.len());
        for rel in &inst.masks {
            let mask_path: PathBuf = base.join(rel);
            let mask = load_mask(&mask_path, width, height)?;
            if mask.area() == 0 {
                bail!("candidate mask {} is empty", mask_path.display());
            }
            candidates.push(MaskCandidate {
                mask,
                instance_index: inst.index,
                source_tag: rel.clone(),
            });
        }
        out.push(ManifestInstance {
            instance_index: inst.index,
            prompt: Point2::new(inst.x, inst.y),
            class_id: inst.class_id,
            candidates,
        });
    }
    out.sort_by_key(|i| i.instance_index);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{GrayImage as LumaImage, Luma};

    fn write_mask(path: &Path, w: u32, h: u32, rect: (u32, u32, u32, u32)) {
        let mut img = LumaImage::new(w, h);
        let (x0, y0, rw, rh) = rect;
        for y in y0..y0 + rh {
            for x in x0..x0 + rw {
                img.put_pixel(x, y, Luma([255u8]));
            }
        }
        img.save(path).unwrap();
    }

    #[test]
    fn loads_instances_with_their_masks() {
        let dir = tempfile::tempdir().unwrap();
        write_mask(&dir.path().join("m0.png"), 32, 24, (4, 4, 10, 6));
        write_mask(&dir.path().join("m1.png"), 32, 24, (2, 2, 20, 12));
        let manifest = dir.path().join("manifest.toml");
        std::fs::write(
            &manifest,
            r#"
            [[instances]]
            index = 0
            x = 9.0
            y = 7.0
            class_id = 1
            masks = ["m0.png", "m1.png"]
            "#,
        )
        .unwrap();
        let loaded = load_manifest(&manifest, 32, 24).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].candidates.len(), 2);
        assert_eq!(loaded[0].candidates[0].mask.area(), 60);
        assert_eq!(loaded[0].class_id, 1);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        write_mask(&dir.path().join("m0.png"), 16, 16, (1, 1, 4, 4));
        let manifest = dir.path().join("manifest.toml");
        std::fs::write(
            &manifest,
            r#"
            [[instances]]
            index = 0
            x = 3.0
            y = 3.0
            class_id = 0
            masks = ["m0.png"]
            "#,
        )
        .unwrap();
        assert!(load_manifest(&manifest, 32, 24).is_err());
    }
}
