//! Dispersion-threshold (I-DT) fixation detection, saccade derivation, and
//! scan-path assembly.
//!
//! The detector is the window-growing I-DT variant: a window that initially
//! spans the minimum fixation duration is accepted when its dispersion
//! (Δx + Δy, see [`crate::geometry::dispersion`]) stays within the
//! threshold, grown sample-by-sample until the threshold breaks, and then
//! emitted as one fixation; otherwise the window start slides by one
//! sample. Invalid samples are bridged when the timestamp gap between
//! neighbouring valid samples stays within `max_gap_ms` (bridged samples
//! count toward duration but not toward dispersion or the centroid);
//! longer gaps terminate any open window.
//!
//! [`oracle`] holds an independently coded naive re-scan implementation of
//! the same contract, used to cross-check the incremental detector.

use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;

use crate::gaze::{GazeRecording, GroupLabel};
use crate::geometry::ViewingGeometry;

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum EventError {
    #[error("recording has no samples")]
    EmptyRecording,
    #[error("invalid detection parameters: {0}")]
    InvalidParams(&'static str),
}

/// What to do with fixations that outlast `fixation_duration_max_ms`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum OverlongPolicy {
    /// Remove them from the scan path entirely.
    #[default]
    Drop,
    /// Keep them with the duration capped at the maximum (centroid and
    /// sample count unchanged).
    Truncate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DetectionParams {
    pub dispersion_threshold_deg: f64,
    pub min_duration_ms: i64,
    pub fixation_duration_min_ms: i64,
    pub fixation_duration_max_ms: i64,
    pub max_saccade_amplitude_deg: f64,
    /// Longest invalid-sample gap bridged inside a fixation.
    pub max_gap_ms: i64,
    pub overlong: OverlongPolicy,
}

impl Default for DetectionParams {
    fn default() -> Self {
        DetectionParams {
            dispersion_threshold_deg: 1.0,
            min_duration_ms: 80,
            fixation_duration_min_ms: 80,
            fixation_duration_max_ms: 1200,
            max_saccade_amplitude_deg: 10.0,
            max_gap_ms: 75,
            overlong: OverlongPolicy::Drop,
        }
    }
}

impl DetectionParams {
    pub fn validate(&self) -> Result<(), EventError> {
        if !(self.dispersion_threshold_deg > 0.0) {
            return Err(EventError::InvalidParams("dispersion threshold must be positive"));
        }
        if self.min_duration_ms <= 0 || self.fixation_duration_min_ms <= 0 {
            return Err(EventError::InvalidParams("duration thresholds must be positive"));
        }
        if self.fixation_duration_min_ms > self.fixation_duration_max_ms {
            return Err(EventError::InvalidParams("fixation duration min exceeds max"));
        }
        if !(self.max_saccade_amplitude_deg > 0.0) {
            return Err(EventError::InvalidParams("saccade amplitude bound must be positive"));
        }
        if self.max_gap_ms < 0 {
            return Err(EventError::InvalidParams("max gap must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Fixation {
    pub start_ms: i64,
    pub end_ms: i64,
    pub centroid_x_px: f64,
    pub centroid_y_px: f64,
    /// Number of valid samples the centroid was computed from.
    pub n_samples: usize,
}

impl Fixation {
    pub fn duration_ms(&self) -> i64 {
        self.end_ms - self.start_ms
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Saccade {
    pub from_fixation_index: usize,
    pub to_fixation_index: usize,
    pub amplitude_deg: f64,
    /// Amplitude strictly below the configured bound.
    pub passes_filter: bool,
}

/// Post-filter fixations, the saccades connecting them, and the raw valid
/// sample polyline; the unit of rendering.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanPath {
    pub participant_id: String,
    pub group: GroupLabel,
    pub fixations: Vec<Fixation>,
    pub saccades: Vec<Saccade>,
    pub raw_polyline: Vec<(f64, f64)>,
}

/// Number of samples the bootstrap window holds: one nominal sample period
/// covers each sample, so `ceil(min_duration_ms * rate_hz / 1000)` samples
/// span the minimum duration (never fewer than 2).
pub fn initial_window_samples(min_duration_ms: i64, rate_hz: f64) -> usize {
    let n = (min_duration_ms as f64 * rate_hz / 1000.0).ceil() as usize;
    n.max(2)
}

/// Incremental I-DT detector. Output fixations are ordered and
/// non-overlapping in time. Degenerate windows (fewer than two valid
/// samples or zero duration) are discarded.
pub fn detect_fixations(
    rec: &GazeRecording,
    params: &DetectionParams,
    geom: &ViewingGeometry,
) -> Result<Vec<Fixation>, EventError> {
    params.validate()?;
    let samples = &rec.samples;
    if samples.is_empty() {
        return Err(EventError::EmptyRecording);
    }
    let thr_px = geom.degrees_to_pixels(params.dispersion_threshold_deg);
    let n0 = initial_window_samples(params.min_duration_ms, rec.rate_hz);
    let n = samples.len();
    let mut fixations = Vec::new();

    let mut i = 0usize;
    'outer: while i + n0 <= n {
        if !samples[i].valid {
            i += 1;
            continue;
        }
        // Bootstrap: n0 consecutive samples by index, starting on a valid
        // one. A too-long internal gap restarts the scan after the gap.
        let mut win = Window::seed(samples[i].x_px, samples[i].y_px);
        let mut last_valid = i;
        for k in i + 1..i + n0 {
            if !samples[k].valid {
                continue;
            }
            if samples[k].t_ms - samples[last_valid].t_ms > params.max_gap_ms {
                i = k;
                continue 'outer;
            }
            win.add(samples[k].x_px, samples[k].y_px);
            last_valid = k;
        }
        if win.dispersion() > thr_px {
            i += 1;
            continue;
        }
        // Grow until dispersion breaks, a gap exceeds the bridge limit, or
        // the data ends.
        let mut k = i + n0;
        while k < n {
            if !samples[k].valid {
                k += 1;
                continue;
            }
            if samples[k].t_ms - samples[last_valid].t_ms > params.max_gap_ms {
                break;
            }
            if win.dispersion_with(samples[k].x_px, samples[k].y_px) > thr_px {
                break;
            }
            win.add(samples[k].x_px, samples[k].y_px);
            last_valid = k;
            k += 1;
        }
        if win.count >= 2 && samples[last_valid].t_ms > samples[i].t_ms {
            fixations.push(Fixation {
                start_ms: samples[i].t_ms,
                end_ms: samples[last_valid].t_ms,
                centroid_x_px: win.sum_x / win.count as f64,
                centroid_y_px: win.sum_y / win.count as f64,
                n_samples: win.count,
            });
        }
        // Continue after the window (at the breaker, the sample past the
        // gap, or the end of data).
        i = k;
    }
    Ok(fixations)
}

/// Running extremes and centroid sums for the open window.
struct Window {
    min_x: f64,
    max_x: f64,
    min_y: f64,
    max_y: f64,
    sum_x: f64,
    sum_y: f64,
    count: usize,
}

impl Window {
    fn seed(x: f64, y: f64) -> Self {
        Window { min_x: x, max_x: x, min_y: y, max_y: y, sum_x: x, sum_y: y, count: 1 }
    }

    fn add(&mut self, x: f64, y: f64) {
        self.min_x = self.min_x.min(x);
        self.max_x = self.max_x.max(x);
        self.min_y = self.min_y.min(y);
        self.max_y = self.max_y.max(y);
        self.sum_x += x;
        self.sum_y += y;
        self.count += 1;
    }

    fn dispersion(&self) -> f64 {
        (self.max_x - self.min_x) + (self.max_y - self.min_y)
    }

    fn dispersion_with(&self, x: f64, y: f64) -> f64 {
        (self.max_x.max(x) - self.min_x.min(x)) + (self.max_y.max(y) - self.min_y.min(y))
    }
}

/// One saccade per adjacent fixation pair; amplitude is the
/// centroid-to-centroid distance in degrees of visual angle.
pub fn derive_saccades(
    fixations: &[Fixation],
    geom: &ViewingGeometry,
    params: &DetectionParams,
) -> Vec<Saccade> {
    fixations
        .windows(2)
        .enumerate()
        .map(|(idx, pair)| {
            let dx = pair[1].centroid_x_px - pair[0].centroid_x_px;
            let dy = pair[1].centroid_y_px - pair[0].centroid_y_px;
            let amplitude_deg = geom.pixels_to_degrees(dx.hypot(dy));
            Saccade {
                from_fixation_index: idx,
                to_fixation_index: idx + 1,
                amplitude_deg,
                passes_filter: amplitude_deg < params.max_saccade_amplitude_deg,
            }
        })
        .collect()
}

/// Detect fixations, apply the duration band, derive saccades on the
/// survivors, and attach the raw valid-sample polyline. Saccades that fail
/// the amplitude filter stay in the list (rendering decides whether to
/// draw them).
pub fn build_scanpath(
    rec: &GazeRecording,
    params: &DetectionParams,
    geom: &ViewingGeometry,
) -> Result<ScanPath, EventError> {
    let detected = detect_fixations(rec, params, geom)?;
    let fixations = filter_duration(detected, params);
    let saccades = derive_saccades(&fixations, geom, params);
    let raw_polyline = rec
        .samples
        .iter()
        .filter(|s| s.valid)
        .map(|s| (s.x_px, s.y_px))
        .collect();
    Ok(ScanPath {
        participant_id: rec.participant_id.clone(),
        group: rec.group,
        fixations,
        saccades,
        raw_polyline,
    })
}

/// Apply the duration band to detected fixations. Idempotent.
pub fn filter_duration(fixations: Vec<Fixation>, params: &DetectionParams) -> Vec<Fixation> {
    fixations
        .into_iter()
        .filter_map(|mut f| {
            let d = f.duration_ms();
            if d < params.fixation_duration_min_ms {
                return None;
            }
            if d > params.fixation_duration_max_ms {
                match params.overlong {
                    OverlongPolicy::Drop => return None,
                    OverlongPolicy::Truncate => {
                        f.end_ms = f.start_ms + params.fixation_duration_max_ms;
                    }
                }
            }
            Some(f)
        })
        .collect()
}

/// Total scan-path length in degrees: the sum of amplitudes over saccades
/// that pass the amplitude filter. Zero for fewer than two fixations.
pub fn scanpath_length_deg(sp: &ScanPath) -> f64 {
    sp.saccades
        .iter()
        .filter(|s| s.passes_filter)
        .map(|s| s.amplitude_deg)
        .sum()
}

pub mod oracle {
    //! Naive reference I-DT used to cross-check [`detect_fixations`]:
    //! every step rebuilds the window's valid point set from scratch and
    //! calls [`crate::geometry::dispersion`] on it. Same contract, no
    //! shared state with the incremental path.

    use alloc::vec::Vec;

    use super::{initial_window_samples, DetectionParams, EventError, Fixation};
    use crate::gaze::{GazeRecording, GazeSample};
    use crate::geometry::{dispersion, ViewingGeometry};

    fn valid_points(samples: &[GazeSample], from: usize, to_inclusive: usize) -> Vec<(f64, f64)> {
        samples[from..=to_inclusive]
            .iter()
            .filter(|s| s.valid)
            .map(|s| (s.x_px, s.y_px))
            .collect()
    }

    fn gap_violation(samples: &[GazeSample], from: usize, to_inclusive: usize, max_gap: i64) -> Option<usize> {
        let mut prev = from;
        for k in from + 1..=to_inclusive {
            if !samples[k].valid {
                continue;
            }
            if samples[k].t_ms - samples[prev].t_ms > max_gap {
                return Some(k);
            }
            prev = k;
        }
        None
    }

    fn last_valid(samples: &[GazeSample], from: usize, to_inclusive: usize) -> usize {
        (from..=to_inclusive).rev().find(|&k| samples[k].valid).unwrap_or(from)
    }

    /// Brute-force re-scan I-DT.
    pub fn detect_fixations_naive(
        rec: &GazeRecording,
        params: &DetectionParams,
        geom: &ViewingGeometry,
    ) -> Result<Vec<Fixation>, EventError> {
        params.validate()?;
        let samples = &rec.samples;
        if samples.is_empty() {
            return Err(EventError::EmptyRecording);
        }
        let thr_px = geom.degrees_to_pixels(params.dispersion_threshold_deg);
        let n0 = initial_window_samples(params.min_duration_ms, rec.rate_hz);
        let n = samples.len();
        let mut out = Vec::new();

        let mut i = 0usize;
        while i + n0 <= n {
            if !samples[i].valid {
                i += 1;
                continue;
            }
            let win_end = i + n0 - 1;
            if let Some(restart) = gap_violation(samples, i, win_end, params.max_gap_ms) {
                i = restart;
                continue;
            }
            if dispersion(&valid_points(samples, i, win_end)).unwrap() > thr_px {
                i += 1;
                continue;
            }
            let mut end = win_end;
            let mut k = win_end + 1;
            while k < n {
                if !samples[k].valid {
                    k += 1;
                    continue;
                }
                let lv = last_valid(samples, i, end);
                if samples[k].t_ms - samples[lv].t_ms > params.max_gap_ms {
                    break;
                }
                if dispersion(&valid_points(samples, i, k)).unwrap() > thr_px {
                    break;
                }
                end = k;
                k += 1;
            }
            let lv = last_valid(samples, i, end);
            let pts = valid_points(samples, i, lv);
            if pts.len() >= 2 && samples[lv].t_ms > samples[i].t_ms {
                let sum_x: f64 = pts.iter().map(|p| p.0).sum();
                let sum_y: f64 = pts.iter().map(|p| p.1).sum();
                out.push(Fixation {
                    start_ms: samples[i].t_ms,
                    end_ms: samples[lv].t_ms,
                    centroid_x_px: sum_x / pts.len() as f64,
                    centroid_y_px: sum_y / pts.len() as f64,
                    n_samples: pts.len(),
                });
            }
            i = k;
        }
        Ok(out)
    }
}
