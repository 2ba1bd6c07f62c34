//! Gaze recording domain types.

use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::ViewingGeometry;

/// Screening group. The declaration order is the canonical (alphabetical)
/// ordering used by every confusion matrix and class list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum GroupLabel {
    Anxious,
    Control,
    Depressive,
}

impl GroupLabel {
    pub const ALL: [GroupLabel; 3] = [GroupLabel::Anxious, GroupLabel::Control, GroupLabel::Depressive];

    pub fn index(self) -> usize {
        match self {
            GroupLabel::Anxious => 0,
            GroupLabel::Control => 1,
            GroupLabel::Depressive => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupLabel::Anxious => "anxious",
            GroupLabel::Control => "control",
            GroupLabel::Depressive => "depressive",
        }
    }

    /// Single-letter form used in report rows (A / C / D).
    pub fn letter(self) -> char {
        match self {
            GroupLabel::Anxious => 'A',
            GroupLabel::Control => 'C',
            GroupLabel::Depressive => 'D',
        }
    }

    pub fn from_name(name: &str) -> Option<GroupLabel> {
        match name {
            "anxious" => Some(GroupLabel::Anxious),
            "control" => Some(GroupLabel::Control),
            "depressive" => Some(GroupLabel::Depressive),
            _ => None,
        }
    }
}

/// One tracker sample. `t_ms` is integer milliseconds from recording start;
/// `valid` is false where the tracker lost the eye.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GazeSample {
    pub t_ms: i64,
    pub x_px: f64,
    pub y_px: f64,
    pub valid: bool,
}

/// Optional questionnaire / demographic metadata carried in the sidecar.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecordingMeta {
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub cesd_score: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub lsas_score: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub age: Option<u32>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub sex: Option<String>,
}

/// A labeled gaze sample stream from one participant viewing one slide.
#[derive(Clone, Debug, PartialEq)]
pub struct GazeRecording {
    pub participant_id: String,
    pub group: GroupLabel,
    /// Nominal sampling rate in Hz (the tracker's configured rate, not the
    /// empirical one).
    pub rate_hz: f64,
    pub samples: Vec<GazeSample>,
    pub meta: RecordingMeta,
}

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum RecordingError {
    #[error("recording has no samples")]
    EmptyRecording,
    #[error("timestamps not strictly increasing at sample index {index}")]
    NonMonotonicTimestamp { index: usize },
    #[error("median inter-sample interval {median_ms} ms is outside +/-20% of nominal {nominal_ms} ms")]
    RateMismatch { median_ms: f64, nominal_ms: f64 },
    #[error("valid sample {index} at ({x}, {y}) lies outside the {width}x{height} screen")]
    OffScreenSample { index: usize, x: f64, y: f64, width: u32, height: u32 },
}

impl GazeRecording {
    /// Nominal inter-sample period in milliseconds.
    pub fn nominal_period_ms(&self) -> f64 {
        1000.0 / self.rate_hz
    }

    /// Median of consecutive timestamp deltas; `None` for < 2 samples.
    pub fn median_interval_ms(&self) -> Option<f64> {
        if self.samples.len() < 2 {
            return None;
        }
        let mut deltas: Vec<i64> = self
            .samples
            .windows(2)
            .map(|w| w[1].t_ms - w[0].t_ms)
            .collect();
        deltas.sort_unstable();
        let n = deltas.len();
        let median = if n % 2 == 1 {
            deltas[n / 2] as f64
        } else {
            (deltas[n / 2 - 1] + deltas[n / 2]) as f64 / 2.0
        };
        Some(median)
    }

    /// Check the recording invariants: non-empty, strictly increasing
    /// timestamps, median interval within ±20% of the nominal period.
    pub fn validate(&self) -> Result<(), RecordingError> {
        if self.samples.is_empty() {
            return Err(RecordingError::EmptyRecording);
        }
        for (i, w) in self.samples.windows(2).enumerate() {
            if w[1].t_ms <= w[0].t_ms {
                return Err(RecordingError::NonMonotonicTimestamp { index: i + 1 });
            }
        }
        if let Some(median) = self.median_interval_ms() {
            let nominal = self.nominal_period_ms();
            if median < 0.8 * nominal || median > 1.2 * nominal {
                return Err(RecordingError::RateMismatch {
                    median_ms: median,
                    nominal_ms: nominal,
                });
            }
        }
        Ok(())
    }

    /// Additionally check that valid samples lie on the screen.
    pub fn validate_against(&self, geom: &ViewingGeometry) -> Result<(), RecordingError> {
        self.validate()?;
        let (w, h) = (geom.screen_width_px, geom.screen_height_px);
        for (i, s) in self.samples.iter().enumerate() {
            if s.valid && !(s.x_px >= 0.0 && s.x_px < w as f64 && s.y_px >= 0.0 && s.y_px < h as f64) {
                return Err(RecordingError::OffScreenSample {
                    index: i,
                    x: s.x_px,
                    y: s.y_px,
                    width: w,
                    height: h,
                });
            }
        }
        Ok(())
    }
}
