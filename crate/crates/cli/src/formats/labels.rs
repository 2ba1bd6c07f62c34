//! Image label sidecars and directory-to-manifest construction.
//!
//! Every rendered or augmented PNG gets a `<stem>.label.json` sidecar
//! carrying its participant, group, and augmentation lineage. When a
//! sidecar is missing, labels fall back to the naming convention
//! `<participant>__<style>[__<op>].png` with participants named
//! `<group>-NNN` (the simulator's convention).

use std::fs;
use std::path::{Path, PathBuf};

use scanpath_core::dataset::{DatasetManifest, DatasetTag, ManifestEntry};
use scanpath_core::gaze::GroupLabel;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelSidecar {
    pub participant_id: String,
    pub group: GroupLabel,
    pub base_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augment_op: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum LabelError {
    #[error("unlabeled image {0}: no sidecar and the filename encodes no group")]
    UnlabeledImage(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid label sidecar: {source}")]
    Sidecar {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Dataset(#[from] scanpath_core::dataset::DatasetError),
}

pub fn sidecar_path(image_path: &Path) -> PathBuf {
    image_path.with_extension("label.json")
}

pub fn write_label(image_path: &Path, label: &LabelSidecar) -> std::io::Result<()> {
    let json = serde_json::to_string_pretty(label).expect("label serializes");
    fs::write(sidecar_path(image_path), json + "\n")
}

fn stem_of(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string()
}

/// Label from sidecar, else from the filename convention.
fn label_for(image_path: &Path) -> Result<LabelSidecar, LabelError> {
    let spath = sidecar_path(image_path);
    if spath.exists() {
        let text = fs::read_to_string(&spath)
            .map_err(|source| LabelError::Io { path: spath.clone(), source })?;
        return serde_json::from_str(&text).map_err(|source| LabelError::Sidecar { path: spath, source });
    }
    let stem = stem_of(image_path);
    let mut parts: Vec<&str> = stem.split("__").collect();
    let participant = parts.first().copied().unwrap_or_default();
    let group = participant
        .split('-')
        .next()
        .and_then(GroupLabel::from_name)
        .ok_or_else(|| LabelError::UnlabeledImage(image_path.to_path_buf()))?;
    // A trailing augmentation segment implies lineage from the shorter stem.
    let augment_op = if parts.len() >= 3 {
        parts.pop().map(String::from)
    } else {
        None
    };
    let base_id = parts.join("__");
    Ok(LabelSidecar {
        participant_id: participant.to_string(),
        group,
        base_id,
        augment_op,
    })
}

/// PNG files in `dir`, filename-sorted.
pub fn png_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Build a manifest from an image directory. `manifest_dir` is where the
/// manifest file will live; image paths are stored relative to it.
pub fn build_manifest(
    image_dir: &Path,
    manifest_dir: &Path,
    tag: DatasetTag,
) -> Result<DatasetManifest, LabelError> {
    let files = png_files(image_dir).map_err(|source| LabelError::Io {
        path: image_dir.to_path_buf(),
        source,
    })?;
    let mut entries = Vec::with_capacity(files.len());
    for path in &files {
        let label = label_for(path)?;
        entries.push(ManifestEntry {
            image_id: stem_of(path),
            image_path: relative_to(path, manifest_dir),
            participant_id: label.participant_id,
            group: label.group,
            base_id: label.base_id,
            augment_op: label.augment_op,
        });
    }
    Ok(DatasetManifest::new(tag, entries)?)
}

/// Forward-slash relative path from `base` to `path`; falls back to the
/// absolute path when they share no prefix.
pub fn relative_to(path: &Path, base: &Path) -> String {
    let path = absolutize(path);
    let base = absolutize(base);
    let mut path_parts: Vec<&std::ffi::OsStr> = path.iter().collect();
    let mut base_parts: Vec<&std::ffi::OsStr> = base.iter().collect();
    let mut common = 0usize;
    while common < path_parts.len().min(base_parts.len()) && path_parts[common] == base_parts[common] {
        common += 1;
    }
    if common == 0 {
        return path.to_string_lossy().into_owned();
    }
    path_parts.drain(..common);
    base_parts.drain(..common);
    let mut out: Vec<String> = base_parts.iter().map(|_| String::from("..")).collect();
    out.extend(path_parts.iter().map(|p| p.to_string_lossy().into_owned()));
    out.join("/")
}

fn absolutize(p: &Path) -> PathBuf {
    if p.is_absolute() {
        normalize(p)
    } else {
        normalize(&std::env::current_dir().unwrap_or_default().join(p))
    }
}

/// Lexical `.`/`..` normalization (no filesystem access).
fn normalize(p: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for comp in p.components() {
        match comp {
            std::path::Component::CurDir => {}
            std::path::Component::ParentDir => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    out
}

/// Resolve a manifest-relative image path.
pub fn resolve_image_path(manifest_dir: &Path, image_path: &str) -> PathBuf {
    let p = Path::new(image_path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        normalize(&manifest_dir.join(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filename_fallback_parses_simulator_names() {
        let l = label_for(Path::new("/nonexistent/control-017__overlay.png")).unwrap();
        assert_eq!(l.group, GroupLabel::Control);
        assert_eq!(l.participant_id, "control-017");
        assert_eq!(l.base_id, "control-017__overlay");
        assert_eq!(l.augment_op, None);

        let l = label_for(Path::new("/nonexistent/depressive-003__overlay__negate.png")).unwrap();
        assert_eq!(l.group, GroupLabel::Depressive);
        assert_eq!(l.base_id, "depressive-003__overlay");
        assert_eq!(l.augment_op, Some("negate".into()));

        assert!(matches!(
            label_for(Path::new("/nonexistent/subject9__overlay.png")),
            Err(LabelError::UnlabeledImage(_))
        ));
    }

    #[test]
    fn relative_paths_roundtrip() {
        let rel = relative_to(Path::new("/a/b/images/x.png"), Path::new("/a/b/manifests"));
        assert_eq!(rel, "../images/x.png");
        let same = relative_to(Path::new("/a/b/x.png"), Path::new("/a/b"));
        assert_eq!(same, "x.png");
        let resolved = resolve_image_path(Path::new("/a/b/manifests"), "../images/x.png");
        assert_eq!(resolved, Path::new("/a/b/images/x.png"));
    }
}
