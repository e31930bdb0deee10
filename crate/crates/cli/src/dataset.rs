use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

/// One image with its annotation sidecars. Optional paths are only
/// required by the branches and phases that consume them.
#[derive(Debug, Clone)]
pub struct DatasetEntry {
    pub id: String,
    pub image: PathBuf,
    pub annotations: PathBuf,
    pub manifest: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct DatasetIndex {
    pub classes: Vec<String>,
    pub entries: Vec<DatasetEntry>,
}

#[derive(Deserialize)]
struct RawIndex {
    classes: Vec<String>,
    #[serde(default)]
    entries: Vec<RawEntry>,
}

#[derive(Deserialize)]
struct RawEntry {
    #[serde(default)]
    id: Option<String>,
    image: String,
    annotations: String,
    #[serde(default)]
    manifest: Option<String>,
    #[serde(default)]
    predictions: Option<String>,
    #[serde(default)]
    reference: Option<String>,
}

/// Load an index file; relative paths resolve against its directory.
pub fn load(path: &Path) -> Result<DatasetIndex> {
    DatasetIndex::load(path)
}

impl DatasetIndex {
    /// Load an index file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading dataset index {}", path.display()))?;
        let raw: RawIndex = toml::from_str(&text)
            .with_context(|| format!("parsing dataset index {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if raw.classes.is_empty() {
            bail!("dataset index declares no classes");
        }
        let mut entries = Vec::with_capacity(raw.entries.len());
        for (k, e) in raw.entries.into_iter().enumerate() {
            let image = base.join(&e.image);
            let annotations = base.join(&e.annotations);
            for (what, p) in [("image", &image), ("annotations", &annotations)] {
                if !p.exists() {
                    bail!("entry {k}: {what} file {} does not exist", p.display());
                }
            }
            let resolve_opt = |field: &Option<String>, what: &str| -> Result<Option<PathBuf>> {
                match field {
                    None => Ok(None),
                    Some(rel) => {
                        let p = base.join(rel);
                        if !p.exists() {
                            bail!("entry {k}: {what} file {} does not exist", p.display());
                        }
                        Ok(Some(p))
                    }
                }
            };
            let id = e.id.clone().unwrap_or_else(|| {
                Path::new(&e.image)
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| format!("entry-{k}"))
            });
            entries.push(DatasetEntry {
                id,
                image,
                annotations,
                manifest: resolve_opt(&e.manifest, "manifest")?,
                predictions: resolve_opt(&e.predictions, "predictions")?,
                reference: resolve_opt(&e.reference, "reference")?,
            });
        }
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if !seen.insert(&e.id) {
                bail!("duplicate entry id {:?}", e.id);
            }
        }
        Ok(Self {
            classes: raw.classes,
            entries,
        })
    }

    pub fn class_id(&self, name: &str) -> Option<u32> {
        self.classes.iter().position(|c| c == name).map(|i| i as u32)
    }
}
