//! Synthetic gaze over a 2x2 emotional-face slide with parameterized
//! attentional biases.
//!
//! A recording is an alternating sequence of fixation episodes and linear
//! saccade transitions, sampled at the nominal rate with Gaussian jitter.
//! Episode AOIs are drawn from the profile's dwell weights (with optional
//! within-AOI re-fixations under hyperscanning), dwell durations from a
//! clamped normal. Every draw comes from one seeded [`Pcg32`] stream in a
//! fixed order, so a (profile, layout, seed) triple reproduces the same
//! recording bit for bit.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::Float;

use crate::gaze::{GazeRecording, GazeSample, GroupLabel, RecordingMeta};
use crate::rng::{derive_seed, Pcg32};

pub const DEFAULT_DURATION_MS: i64 = 10_000;
pub const DEFAULT_RATE_HZ: f64 = 120.0;

/// Standard deviation of the per-episode target scatter around the AOI
/// center, in pixels.
pub const TARGET_SCATTER_SD_PX: f64 = 40.0;

/// Dwell durations are drawn from a normal and clamped to this band before
/// the sad bonus and hyperscan division, keeping fixations inside the
/// detector's analysis range.
pub const DWELL_CLAMP_MS: (f64, f64) = (90.0, 1100.0);

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum SimulateError {
    #[error("invalid bias profile: {0}")]
    InvalidProfile(&'static str),
    #[error("invalid slide layout: {0}")]
    InvalidLayout(&'static str),
    #[error("invalid simulation arguments: {0}")]
    InvalidArgs(&'static str),
}

/// Facial-expression category of one AOI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Emotion {
    Neutral,
    Sad,
    Angry,
    Happy,
}

impl Emotion {
    pub const ALL: [Emotion; 4] = [Emotion::Neutral, Emotion::Sad, Emotion::Angry, Emotion::Happy];

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Neutral => "neutral",
            Emotion::Sad => "sad",
            Emotion::Angry => "angry",
            Emotion::Happy => "happy",
        }
    }
}

/// Axis-aligned AOI rectangle tagged with an emotion.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Aoi {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    pub emotion: Emotion,
}

impl Aoi {
    pub fn center(&self) -> (f64, f64) {
        (self.x + self.width / 2.0, self.y + self.height / 2.0)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }

    fn overlaps(&self, other: &Aoi) -> bool {
        self.x < other.x + other.width
            && other.x < self.x + self.width
            && self.y < other.y + other.height
            && other.y < self.y + self.height
    }
}

/// The stimulus slide: a canvas and four emotion-tagged AOIs in a 2x2 grid.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlideLayout {
    pub canvas_width_px: u32,
    pub canvas_height_px: u32,
    pub aois: Vec<Aoi>,
}

impl SlideLayout {
    pub fn validate(&self) -> Result<(), SimulateError> {
        if self.aois.len() != 4 {
            return Err(SimulateError::InvalidLayout("expected exactly 4 AOIs"));
        }
        let (w, h) = (self.canvas_width_px as f64, self.canvas_height_px as f64);
        for aoi in &self.aois {
            if aoi.x < 0.0 || aoi.y < 0.0 || aoi.x + aoi.width > w || aoi.y + aoi.height > h {
                return Err(SimulateError::InvalidLayout("AOI outside canvas"));
            }
        }
        for (i, a) in self.aois.iter().enumerate() {
            for b in &self.aois[i + 1..] {
                if a.overlaps(b) {
                    return Err(SimulateError::InvalidLayout("AOIs overlap"));
                }
            }
        }
        for emotion in Emotion::ALL {
            if self.aois.iter().filter(|a| a.emotion == emotion).count() != 1 {
                return Err(SimulateError::InvalidLayout("each emotion must appear exactly once"));
            }
        }
        Ok(())
    }

    /// AOI index containing the point, if any.
    pub fn aoi_at(&self, x: f64, y: f64) -> Option<usize> {
        self.aois.iter().position(|a| a.contains(x, y))
    }
}

/// 2x2 grid of 700x420 px AOIs centered in the quadrants of a 1680x1050
/// canvas. Fixed emotion order: neutral top-left, sad top-right, angry
/// bottom-left, happy bottom-right.
pub fn default_layout() -> SlideLayout {
    let tags = [Emotion::Neutral, Emotion::Sad, Emotion::Angry, Emotion::Happy];
    layout_with_tags(tags)
}

/// Same rectangles as [`default_layout`] with the emotion tags permuted by
/// the seed.
pub fn layout_permuted(seed: u64) -> SlideLayout {
    let mut tags = [Emotion::Neutral, Emotion::Sad, Emotion::Angry, Emotion::Happy];
    let mut rng = Pcg32::new(seed, STREAM_LAYOUT);
    rng.shuffle(&mut tags);
    layout_with_tags(tags)
}

fn layout_with_tags(tags: [Emotion; 4]) -> SlideLayout {
    let (cw, ch) = (1680u32, 1050u32);
    let (aw, ah) = (700.0, 420.0);
    let centers = [
        (cw as f64 * 0.25, ch as f64 * 0.25),
        (cw as f64 * 0.75, ch as f64 * 0.25),
        (cw as f64 * 0.25, ch as f64 * 0.75),
        (cw as f64 * 0.75, ch as f64 * 0.75),
    ];
    let aois = centers
        .iter()
        .zip(tags)
        .map(|(&(cx, cy), emotion)| Aoi {
            x: cx - aw / 2.0,
            y: cy - ah / 2.0,
            width: aw,
            height: ah,
            emotion,
        })
        .collect();
    SlideLayout { canvas_width_px: cw, canvas_height_px: ch, aois }
}

/// Per-emotion next-AOI selection weights.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DwellWeights {
    pub neutral: f64,
    pub sad: f64,
    pub angry: f64,
    pub happy: f64,
}

impl DwellWeights {
    pub fn get(&self, emotion: Emotion) -> f64 {
        match emotion {
            Emotion::Neutral => self.neutral,
            Emotion::Sad => self.sad,
            Emotion::Angry => self.angry,
            Emotion::Happy => self.happy,
        }
    }

    pub fn sum(&self) -> f64 {
        self.neutral + self.sad + self.angry + self.happy
    }
}

/// Parameterized viewing style. The preset magnitudes encode qualitative
/// group differences (negative-information bias, slow sad disengagement,
/// anxious hyperscanning) at desk-test separability; they are synthetic
/// values, not measured quantities.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BiasProfile {
    pub name: String,
    pub group: GroupLabel,
    pub dwell_weights: DwellWeights,
    pub fixation_mean_ms: f64,
    pub fixation_sd_ms: f64,
    /// Extra dwell appended to fixations on the sad AOI.
    pub sad_disengage_bonus_ms: f64,
    /// >= 1. Divides dwell durations and adds within-AOI re-fixations with
    /// probability 1 - 1/rate, multiplying the fixation count.
    pub hyperscan_rate: f64,
    /// Per-sample Gaussian gaze noise, in pixels.
    pub jitter_px: f64,
    /// Saccade flight time between episodes, in milliseconds.
    pub transition_ms: f64,
}

impl BiasProfile {
    pub fn validate(&self) -> Result<(), SimulateError> {
        let w = &self.dwell_weights;
        if w.neutral < 0.0 || w.sad < 0.0 || w.angry < 0.0 || w.happy < 0.0 {
            return Err(SimulateError::InvalidProfile("negative dwell weight"));
        }
        if !(w.sum() > 0.0) {
            return Err(SimulateError::InvalidProfile("dwell weights sum to zero"));
        }
        let mean_with_bonus = self.fixation_mean_ms + self.sad_disengage_bonus_ms;
        if self.fixation_mean_ms < 80.0 || mean_with_bonus > 1200.0 {
            return Err(SimulateError::InvalidProfile("mean dwell outside the 80-1200 ms retention band"));
        }
        if self.fixation_sd_ms < 0.0 {
            return Err(SimulateError::InvalidProfile("negative dwell sd"));
        }
        if !(self.hyperscan_rate >= 1.0) {
            return Err(SimulateError::InvalidProfile("hyperscan rate must be >= 1"));
        }
        if self.jitter_px < 0.0 {
            return Err(SimulateError::InvalidProfile("negative jitter"));
        }
        if !(self.transition_ms > 0.0) {
            return Err(SimulateError::InvalidProfile("transition time must be positive"));
        }
        Ok(())
    }

    /// Normalized AOI selection probability per emotion.
    pub fn selection_probability(&self, emotion: Emotion) -> f64 {
        self.dwell_weights.get(emotion) / self.dwell_weights.sum()
    }
}

/// The three preset profiles: control, depressive, anxious.
pub fn preset_profiles() -> Vec<BiasProfile> {
    let control = BiasProfile {
        name: "control".to_string(),
        group: GroupLabel::Control,
        dwell_weights: DwellWeights { neutral: 1.0, sad: 0.8, angry: 0.8, happy: 1.4 },
        fixation_mean_ms: 300.0,
        fixation_sd_ms: 80.0,
        sad_disengage_bonus_ms: 0.0,
        hyperscan_rate: 1.0,
        jitter_px: 2.0,
        transition_ms: 30.0,
    };
    let depressive = BiasProfile {
        name: "depressive".to_string(),
        group: GroupLabel::Depressive,
        dwell_weights: DwellWeights { neutral: 1.0, sad: 1.8, angry: 1.2, happy: 0.7 },
        sad_disengage_bonus_ms: 150.0,
        ..control.clone()
    };
    let anxious = BiasProfile {
        name: "anxious".to_string(),
        group: GroupLabel::Anxious,
        dwell_weights: DwellWeights { neutral: 1.0, sad: 1.0, angry: 1.6, happy: 0.9 },
        hyperscan_rate: 1.6,
        ..control.clone()
    };
    alloc::vec![control, depressive, anxious]
}

pub fn preset_profile(name: &str) -> Option<BiasProfile> {
    preset_profiles().into_iter().find(|p| p.name == name)
}

/// Ground-truth fixation episode injected by the simulator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixationEpisode {
    pub aoi_index: usize,
    pub emotion: Emotion,
    pub target_x_px: f64,
    pub target_y_px: f64,
    pub start_ms: f64,
    pub end_ms: f64,
}

impl FixationEpisode {
    pub fn dwell_ms(&self) -> f64 {
        self.end_ms - self.start_ms
    }
}

// Pcg32 stream selectors, one per consumer, so the same seed can be reused
// across concerns without draw interleaving.
const STREAM_RECORDING: u64 = 1;
const STREAM_LAYOUT: u64 = 2;

/// Simulate one recording; see the module docs for the generation model.
/// The sample count is exactly `round(duration_ms * rate_hz / 1000)`.
pub fn simulate_recording(
    profile: &BiasProfile,
    layout: &SlideLayout,
    duration_ms: i64,
    rate_hz: f64,
    seed: u64,
) -> Result<GazeRecording, SimulateError> {
    simulate_recording_with_episodes(profile, layout, duration_ms, rate_hz, seed).map(|(rec, _)| rec)
}

/// [`simulate_recording`] plus the injected ground-truth episode list,
/// which downstream consistency checks compare against detected fixations.
pub fn simulate_recording_with_episodes(
    profile: &BiasProfile,
    layout: &SlideLayout,
    duration_ms: i64,
    rate_hz: f64,
    seed: u64,
) -> Result<(GazeRecording, Vec<FixationEpisode>), SimulateError> {
    profile.validate()?;
    layout.validate()?;
    if duration_ms <= 0 {
        return Err(SimulateError::InvalidArgs("duration must be positive"));
    }
    if !(rate_hz > 0.0 && rate_hz <= 1000.0) {
        return Err(SimulateError::InvalidArgs("rate must be in (0, 1000] Hz"));
    }

    let mut rng = Pcg32::new(seed, STREAM_RECORDING);
    let episodes = plan_episodes(profile, layout, duration_ms as f64, &mut rng);

    let n_samples = Float::round(duration_ms as f64 * rate_hz / 1000.0) as usize;
    let period_ms = 1000.0 / rate_hz;
    let max_x = layout.canvas_width_px as f64 - 1.0;
    let max_y = layout.canvas_height_px as f64 - 1.0;
    let mut samples = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let t = i as f64 * period_ms;
        let (mut x, mut y) = position_at(&episodes, profile.transition_ms, t);
        x += rng.next_normal(0.0, profile.jitter_px);
        y += rng.next_normal(0.0, profile.jitter_px);
        samples.push(GazeSample {
            t_ms: Float::round(t) as i64,
            x_px: x.clamp(0.0, max_x),
            y_px: y.clamp(0.0, max_y),
            valid: true,
        });
    }

    let rec = GazeRecording {
        participant_id: format!("{}-{}", profile.name, seed),
        group: profile.group,
        rate_hz,
        samples,
        meta: RecordingMeta::default(),
    };
    Ok((rec, episodes))
}

/// Draw the episode timeline. Draw order per episode: re-fixation uniform
/// (only when hyperscanning), AOI pick, target scatter x then y, dwell.
fn plan_episodes(
    profile: &BiasProfile,
    layout: &SlideLayout,
    duration_ms: f64,
    rng: &mut Pcg32,
) -> Vec<FixationEpisode> {
    let mut episodes: Vec<FixationEpisode> = Vec::new();
    let mut t = 0.0;
    let mut prev_aoi: Option<usize> = None;
    while t < duration_ms {
        let aoi_index = match prev_aoi {
            Some(prev) if profile.hyperscan_rate > 1.0 => {
                let refix = rng.next_f64() < 1.0 - 1.0 / profile.hyperscan_rate;
                if refix {
                    prev
                } else {
                    pick_aoi(profile, layout, rng)
                }
            }
            _ => pick_aoi(profile, layout, rng),
        };
        let aoi = &layout.aois[aoi_index];
        let (cx, cy) = aoi.center();
        let target_x = (cx + rng.next_normal(0.0, TARGET_SCATTER_SD_PX))
            .clamp(0.0, layout.canvas_width_px as f64 - 1.0);
        let target_y = (cy + rng.next_normal(0.0, TARGET_SCATTER_SD_PX))
            .clamp(0.0, layout.canvas_height_px as f64 - 1.0);
        let mut dwell = rng
            .next_normal(profile.fixation_mean_ms, profile.fixation_sd_ms)
            .clamp(DWELL_CLAMP_MS.0, DWELL_CLAMP_MS.1);
        if aoi.emotion == Emotion::Sad {
            dwell += profile.sad_disengage_bonus_ms;
        }
        dwell /= profile.hyperscan_rate;
        episodes.push(FixationEpisode {
            aoi_index,
            emotion: aoi.emotion,
            target_x_px: target_x,
            target_y_px: target_y,
            start_ms: t,
            end_ms: t + dwell,
        });
        t += dwell + profile.transition_ms;
        prev_aoi = Some(aoi_index);
    }
    episodes
}

fn pick_aoi(profile: &BiasProfile, layout: &SlideLayout, rng: &mut Pcg32) -> usize {
    let total: f64 = layout.aois.iter().map(|a| profile.dwell_weights.get(a.emotion)).sum();
    let mut u = rng.next_f64() * total;
    for (i, aoi) in layout.aois.iter().enumerate() {
        let w = profile.dwell_weights.get(aoi.emotion);
        if u < w {
            return i;
        }
        u -= w;
    }
    layout.aois.len() - 1
}

/// Gaze position at time `t`: the episode target during an episode, linear
/// interpolation during the transition after it, held at the last target
/// past the end of the plan.
fn position_at(episodes: &[FixationEpisode], transition_ms: f64, t: f64) -> (f64, f64) {
    debug_assert!(!episodes.is_empty());
    let idx = match episodes.iter().rposition(|e| e.start_ms <= t) {
        Some(i) => i,
        None => return (episodes[0].target_x_px, episodes[0].target_y_px),
    };
    let ep = &episodes[idx];
    if t < ep.end_ms || idx + 1 == episodes.len() {
        return (ep.target_x_px, ep.target_y_px);
    }
    let next = &episodes[idx + 1];
    let frac = ((t - ep.end_ms) / transition_ms).clamp(0.0, 1.0);
    (
        ep.target_x_px + (next.target_x_px - ep.target_x_px) * frac,
        ep.target_y_px + (next.target_y_px - ep.target_y_px) * frac,
    )
}

/// Fraction of total episode dwell time spent on the given emotion's AOI.
pub fn emotion_dwell_share(episodes: &[FixationEpisode], emotion: Emotion) -> f64 {
    let total: f64 = episodes.iter().map(|e| e.dwell_ms()).sum();
    if total <= 0.0 {
        return 0.0;
    }
    episodes.iter().filter(|e| e.emotion == emotion).map(|e| e.dwell_ms()).sum::<f64>() / total
}

/// `n` recordings on the default layout with per-member derived seeds and
/// participant ids `<profile>-NNN`.
pub fn simulate_cohort(
    profile: &BiasProfile,
    n: usize,
    seed: u64,
) -> Result<Vec<GazeRecording>, SimulateError> {
    if n == 0 {
        return Err(SimulateError::InvalidArgs("cohort size must be >= 1"));
    }
    let layout = default_layout();
    let mut cohort = Vec::with_capacity(n);
    for k in 0..n {
        let member_seed = derive_seed(seed, k as u64);
        let mut rec = simulate_recording(profile, &layout, DEFAULT_DURATION_MS, DEFAULT_RATE_HZ, member_seed)?;
        rec.participant_id = format!("{}-{:03}", profile.name, k);
        cohort.push(rec);
    }
    Ok(cohort)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use approx::assert_relative_eq;

    #[test]
    fn default_layout_satisfies_invariants() {
        let layout = default_layout();
        assert_eq!(layout.validate(), Ok(()));
        let centers: Vec<(f64, f64)> = layout.aois.iter().map(|a| a.center()).collect();
        let expected = [(420.0, 262.5), (1260.0, 262.5), (420.0, 787.5), (1260.0, 787.5)];
        for (c, e) in centers.iter().zip(expected) {
            assert!((c.0 - e.0).abs() <= 1.0 && (c.1 - e.1).abs() <= 1.0, "{c:?} vs {e:?}");
        }
    }

    #[test]
    fn permuted_layout_keeps_rectangles() {
        let base = default_layout();
        let permuted = layout_permuted(3);
        assert_eq!(permuted.validate(), Ok(()));
        for (a, b) in base.aois.iter().zip(&permuted.aois) {
            assert_eq!((a.x, a.y, a.width, a.height), (b.x, b.y, b.width, b.height));
        }
        // Some seed must actually permute.
        let any_moved = (0..16).any(|s| {
            layout_permuted(s).aois.iter().zip(&base.aois).any(|(p, b)| p.emotion != b.emotion)
        });
        assert!(any_moved);
    }

    #[test]
    fn preset_selection_probabilities() {
        let control = preset_profile("control").unwrap();
        assert_relative_eq!(control.selection_probability(Emotion::Sad), 0.8 / 4.0);
        let depressive = preset_profile("depressive").unwrap();
        let p_sad = depressive.selection_probability(Emotion::Sad);
        assert_relative_eq!(p_sad, 1.8 / 4.7, epsilon = 1e-12);
        assert!(p_sad >= 1.5 * control.selection_probability(Emotion::Sad));

        let uniform = BiasProfile {
            dwell_weights: DwellWeights { neutral: 1.0, sad: 1.0, angry: 1.0, happy: 1.0 },
            ..control
        };
        for emotion in Emotion::ALL {
            assert_relative_eq!(uniform.selection_probability(emotion), 0.25);
        }
        for preset in preset_profiles() {
            assert_eq!(preset.validate(), Ok(()));
        }
    }

    #[test]
    fn sample_count_and_timestamps() {
        let profile = preset_profile("control").unwrap();
        let layout = default_layout();
        let rec = simulate_recording(&profile, &layout, 10_000, 120.0, 42).unwrap();
        assert_eq!(rec.samples.len(), 1200);
        assert!(rec.samples.windows(2).all(|w| w[1].t_ms > w[0].t_ms));
        assert_eq!(rec.validate(), Ok(()));
        // 1.5 s at 60 Hz -> 90 samples.
        let rec = simulate_recording(&profile, &layout, 1_500, 60.0, 42).unwrap();
        assert_eq!(rec.samples.len(), 90);
    }

    #[test]
    fn identical_seeds_are_bit_identical() {
        let profile = preset_profile("anxious").unwrap();
        let layout = default_layout();
        let a = simulate_recording(&profile, &layout, 10_000, 120.0, 7).unwrap();
        let b = simulate_recording(&profile, &layout, 10_000, 120.0, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate_recording(&profile, &layout, 10_000, 120.0, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn samples_stay_on_screen() {
        let geom = crate::geometry::ViewingGeometry::default();
        for (i, profile) in preset_profiles().iter().enumerate() {
            let rec = simulate_recording(profile, &default_layout(), 10_000, 120.0, 100 + i as u64).unwrap();
            assert_eq!(rec.validate_against(&geom), Ok(()));
        }
    }

    #[test]
    fn cohort_labels_and_determinism() {
        let profile = preset_profile("depressive").unwrap();
        let cohort = simulate_cohort(&profile, 40, 11).unwrap();
        assert_eq!(cohort.len(), 40);
        assert!(cohort.iter().all(|r| r.group == GroupLabel::Depressive));
        assert_eq!(cohort[0].participant_id, "depressive-000");
        assert_eq!(cohort[39].participant_id, "depressive-039");
        let again = simulate_cohort(&profile, 40, 11).unwrap();
        assert_eq!(cohort, again);
        // Members differ from each other.
        assert_ne!(cohort[0].samples, cohort[1].samples);
    }

    #[test]
    fn invalid_profiles_rejected() {
        let mut p = preset_profile("control").unwrap();
        p.dwell_weights = DwellWeights { neutral: 0.0, sad: 0.0, angry: 0.0, happy: 0.0 };
        assert!(matches!(p.validate(), Err(SimulateError::InvalidProfile(_))));
        let mut p = preset_profile("control").unwrap();
        p.hyperscan_rate = 0.5;
        assert!(p.validate().is_err());
        let mut p = preset_profile("control").unwrap();
        p.fixation_mean_ms = 1150.0;
        p.sad_disengage_bonus_ms = 100.0;
        assert!(p.validate().is_err());
    }
}
