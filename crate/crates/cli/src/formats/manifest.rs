//! Dataset manifest files: a JSON header (tag + split provenance) plus
//! the entry array.

use std::fs;
use std::path::Path;

use scanpath_core::dataset::{DatasetManifest, DatasetTag, ManifestEntry, SplitInfo};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
struct ManifestFile {
    tag: DatasetTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<SplitInfo>,
    entries: Vec<ManifestEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestIoError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("invalid manifest: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Dataset(#[from] scanpath_core::dataset::DatasetError),
}

pub fn write_manifest(path: &Path, manifest: &DatasetManifest) -> Result<(), ManifestIoError> {
    let file = ManifestFile {
        tag: manifest.tag,
        split: manifest.split.clone(),
        entries: manifest.entries.clone(),
    };
    let json = serde_json::to_string_pretty(&file)?;
    fs::write(path, json + "\n")?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest, ManifestIoError> {
    let text = fs::read_to_string(path)?;
    let file: ManifestFile = serde_json::from_str(&text)?;
    let mut manifest = DatasetManifest::new(file.tag, file.entries)?;
    manifest.split = file.split;
    Ok(manifest)
}
