//! Labeled image manifests and leakage-safe train/test splits.

use alloc::string::String;
use alloc::vec::Vec;

use crate::gaze::GroupLabel;
use crate::rng::Pcg32;

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("class {group:?} has only {units} split unit(s); need at least 2")]
    ClassTooSmall { group: GroupLabel, units: usize },
    #[error("subset selects no entries")]
    EmptyResult,
    #[error("duplicate image id {0}")]
    DuplicateImageId(String),
    #[error("split fraction must be strictly between 0 and 1")]
    InvalidFraction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DatasetTag {
    A1,
    A2,
    B,
    #[cfg_attr(feature = "serde", serde(rename = "synthetic"))]
    Synthetic,
}

impl DatasetTag {
    pub fn name(self) -> &'static str {
        match self {
            DatasetTag::A1 => "A1",
            DatasetTag::A2 => "A2",
            DatasetTag::B => "B",
            DatasetTag::Synthetic => "synthetic",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "A1" | "a1" => Some(DatasetTag::A1),
            "A2" | "a2" => Some(DatasetTag::A2),
            "B" | "b" => Some(DatasetTag::B),
            "synthetic" => Some(DatasetTag::Synthetic),
            _ => None,
        }
    }
}

/// Which identifier the split keeps together in one fold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SplitUnit {
    /// Each image is assigned independently (the literal protocol; can
    /// leak augmented twins of one source across folds).
    Image,
    /// All images sharing a participant — hence every augmented variant of
    /// a source image — land in the same fold.
    #[default]
    Participant,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ManifestEntry {
    /// Image id: the filename stem, unique within a manifest.
    pub image_id: String,
    /// Path relative to the manifest's directory.
    pub image_path: String,
    pub participant_id: String,
    pub group: GroupLabel,
    /// Id of the unaugmented source image (equals `image_id` for
    /// originals).
    pub base_id: String,
    /// Augmentation name when this is a derived image.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub augment_op: Option<String>,
}

impl ManifestEntry {
    /// `augment_op` present iff this image is derived from another.
    pub fn lineage_consistent(&self) -> bool {
        self.augment_op.is_some() == (self.base_id != self.image_id)
    }
}

/// Split provenance recorded in the manifest header after a split.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitInfo {
    pub seed: u64,
    pub fraction: f64,
    pub unit: SplitUnit,
    /// "train" or "test".
    pub fold: String,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DatasetManifest {
    pub tag: DatasetTag,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub split: Option<SplitInfo>,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(tag: DatasetTag, entries: Vec<ManifestEntry>) -> Result<Self, DatasetError> {
        let manifest = DatasetManifest { tag, split: None, entries };
        manifest.check_unique_ids()?;
        Ok(manifest)
    }

    pub fn check_unique_ids(&self) -> Result<(), DatasetError> {
        let mut ids: Vec<&str> = self.entries.iter().map(|e| e.image_id.as_str()).collect();
        ids.sort_unstable();
        for pair in ids.windows(2) {
            if pair[0] == pair[1] {
                return Err(DatasetError::DuplicateImageId(String::from(pair[0])));
            }
        }
        Ok(())
    }

    /// Entry count per group, in canonical A/C/D order.
    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for e in &self.entries {
            counts[e.group.index()] += 1;
        }
        counts
    }

    /// Distinct groups present, canonical order.
    pub fn present_classes(&self) -> Vec<GroupLabel> {
        let counts = self.class_counts();
        GroupLabel::ALL.iter().copied().filter(|g| counts[g.index()] > 0).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Stratified deterministic split: per class, the distinct unit keys are
/// sorted, shuffled by a PCG stream derived from (seed, class), and the
/// first `floor(fraction * n_units)` keys go to train. Under
/// `SplitUnit::Participant` a unit is a participant id, so augmented
/// variants can never straddle folds.
pub fn split(
    manifest: &DatasetManifest,
    fraction: f64,
    seed: u64,
    unit: SplitUnit,
) -> Result<(DatasetManifest, DatasetManifest), DatasetError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DatasetError::InvalidFraction);
    }
    let mut train_keys: Vec<&str> = Vec::new();
    let mut test_keys: Vec<&str> = Vec::new();
    for group in GroupLabel::ALL {
        let mut keys: Vec<&str> = manifest
            .entries
            .iter()
            .filter(|e| e.group == group)
            .map(|e| unit_key(e, unit))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        if keys.is_empty() {
            continue;
        }
        if keys.len() < 2 {
            return Err(DatasetError::ClassTooSmall { group, units: keys.len() });
        }
        let mut rng = Pcg32::new(seed, 0x10 + group.index() as u64);
        rng.shuffle(&mut keys);
        let n_train = (fraction * keys.len() as f64) as usize;
        train_keys.extend(&keys[..n_train]);
        test_keys.extend(&keys[n_train..]);
    }

    let pick = |keys: &[&str], fold: &str| -> DatasetManifest {
        DatasetManifest {
            tag: manifest.tag,
            split: Some(SplitInfo {
                seed,
                fraction,
                unit,
                fold: String::from(fold),
            }),
            entries: manifest
                .entries
                .iter()
                .filter(|e| keys.contains(&unit_key(e, unit)))
                .cloned()
                .collect(),
        }
    };
    Ok((pick(&train_keys, "train"), pick(&test_keys, "test")))
}

fn unit_key(entry: &ManifestEntry, unit: SplitUnit) -> &str {
    match unit {
        SplitUnit::Image => &entry.image_id,
        SplitUnit::Participant => &entry.participant_id,
    }
}

/// Restrict a manifest to the given classes.
pub fn subset(manifest: &DatasetManifest, classes: &[GroupLabel]) -> Result<DatasetManifest, DatasetError> {
    let entries: Vec<ManifestEntry> = manifest
        .entries
        .iter()
        .filter(|e| classes.contains(&e.group))
        .cloned()
        .collect();
    if entries.is_empty() {
        return Err(DatasetError::EmptyResult);
    }
    Ok(DatasetManifest { tag: manifest.tag, split: manifest.split.clone(), entries })
}
