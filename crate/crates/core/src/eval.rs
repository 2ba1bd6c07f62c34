//! Confusion matrices, accuracy, and report formatting.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::gaze::GroupLabel;
use crate::raster::RasterImage;

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("confusion matrix has no observations")]
    EmptyMatrix,
    #[error("label {0:?} is not among the matrix classes")]
    UnknownLabel(GroupLabel),
}

/// Counts of (true class, predicted class) pairs. Rows are the true class,
/// columns the predicted class, both in the order of `classes`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: Vec<GroupLabel>,
    counts: Vec<u32>,
}

impl ConfusionMatrix {
    /// `classes` must be non-empty and duplicate-free; canonical order is
    /// up to the caller (model class order everywhere in this pipeline).
    pub fn new(classes: Vec<GroupLabel>) -> Self {
        assert!(!classes.is_empty(), "confusion matrix needs at least one class");
        let n = classes.len();
        for (i, c) in classes.iter().enumerate() {
            assert!(!classes[..i].contains(c), "duplicate class {c:?}");
        }
        ConfusionMatrix { classes, counts: vec![0; n * n] }
    }

    pub fn classes(&self) -> &[GroupLabel] {
        &self.classes
    }

    pub fn n(&self) -> usize {
        self.classes.len()
    }

    fn class_index(&self, label: GroupLabel) -> Result<usize, EvalError> {
        self.classes.iter().position(|&c| c == label).ok_or(EvalError::UnknownLabel(label))
    }

    pub fn record(&mut self, true_label: GroupLabel, predicted: GroupLabel) -> Result<(), EvalError> {
        let t = self.class_index(true_label)?;
        let p = self.class_index(predicted)?;
        let n = self.n();
        self.counts[t * n + p] += 1;
        Ok(())
    }

    pub fn count(&self, true_label: GroupLabel, predicted: GroupLabel) -> u32 {
        let t = self.class_index(true_label).expect("true label");
        let p = self.class_index(predicted).expect("predicted label");
        self.counts[t * self.n() + p]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n()).map(|i| self.counts[i * self.n() + i] as u64).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.n())
            .map(|r| self.counts[r * self.n()..(r + 1) * self.n()].iter().map(|&c| c as u64).sum())
            .collect()
    }

    /// trace / total.
    pub fn accuracy(&self) -> Result<f64, EvalError> {
        let total = self.total();
        if total == 0 {
            return Err(EvalError::EmptyMatrix);
        }
        Ok(self.trace() as f64 / total as f64)
    }

    /// CSV with a header row of predicted-class letters and one row per
    /// true class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for c in &self.classes {
            out.push(',');
            out.push(c.letter());
        }
        out.push('\n');
        for (r, c) in self.classes.iter().enumerate() {
            out.push(c.letter());
            for p in 0..self.n() {
                out.push_str(&format!(",{}", self.counts[r * self.n() + p]));
            }
            out.push('\n');
        }
        out
    }

    /// Deterministic heatmap: `cell_px` square per cell, shade
    /// proportional to count / max count (white to dark blue).
    pub fn heatmap(&self, cell_px: u32) -> RasterImage {
        let n = self.n() as u32;
        let max = self.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        let mut img = RasterImage::new(n * cell_px, n * cell_px);
        for r in 0..n {
            for c in 0..n {
                let v = self.counts[(r * n + c) as usize] as f64 / max;
                let shade = |lo: f64, hi: f64| Float::round(hi + (lo - hi) * v) as u8;
                let rgba = [shade(8.0, 255.0), shade(48.0, 255.0), shade(107.0, 255.0), 255];
                for y in r * cell_px..(r + 1) * cell_px {
                    for x in c * cell_px..(c + 1) * cell_px {
                        img.put(x, y, rgba);
                    }
                }
            }
        }
        img
    }
}

/// Accuracy rendered in the tables' one-decimal percent style ("63.6%").
pub fn accuracy_percent(accuracy: f64) -> String {
    format!("{:.1}%", accuracy * 100.0)
}

/// One summary row: `<architecture>,(Dataset <tag>) <classes>,<accuracy>`,
/// e.g. `ResNet-18,(Dataset B) C, D,85.7%`.
pub fn report_row(architecture: &str, tag: &str, classes: &[GroupLabel], accuracy: f64) -> String {
    let class_list: Vec<String> = classes.iter().map(|c| String::from(c.letter())).collect();
    format!(
        "{architecture},(Dataset {tag}) {},{}",
        class_list.join(", "),
        accuracy_percent(accuracy)
    )
}

/// Accumulate a confusion matrix from (true, predicted) pairs.
pub fn confusion_from_pairs(
    classes: Vec<GroupLabel>,
    pairs: impl IntoIterator<Item = (GroupLabel, GroupLabel)>,
) -> Result<ConfusionMatrix, EvalError> {
    let mut cm = ConfusionMatrix::new(classes);
    let mut any = false;
    for (t, p) in pairs {
        cm.record(t, p)?;
        any = true;
    }
    if !any {
        return Err(EvalError::EmptyTestSet);
    }
    Ok(cm)
}

/// Index of the largest probability; ties go to the lower class index.
pub fn argmax(probabilities: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probabilities.iter().enumerate().skip(1) {
        if p > probabilities[best] {
            best = i;
        }
    }
    best
}
