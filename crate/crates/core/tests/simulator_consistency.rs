//! Statistical checks on the simulator and its agreement with the
//! detection pipeline.

use scanpath_core::events::{self, DetectionParams};
use scanpath_core::geometry::ViewingGeometry;
use scanpath_core::simulate::{
    default_layout, emotion_dwell_share, preset_profile, simulate_recording_with_episodes, Emotion,
};

#[test]
fn control_sad_dwell_share_matches_selection_probability() {
    let profile = preset_profile("control").unwrap();
    let layout = default_layout();
    let mut total = 0.0;
    let n_seeds = 100;
    for seed in 0..n_seeds {
        let (_, episodes) =
            simulate_recording_with_episodes(&profile, &layout, 10_000, 120.0, seed).unwrap();
        total += emotion_dwell_share(&episodes, Emotion::Sad);
    }
    let mean = total / n_seeds as f64;
    assert!((mean - 0.20).abs() <= 0.05, "control sad dwell share {mean}");
}

#[test]
fn all_emotions_get_weight_proportional_share() {
    let profile = preset_profile("control").unwrap();
    let layout = default_layout();
    let mut shares = [0.0f64; 4];
    let n_seeds = 100;
    for seed in 0..n_seeds {
        let (_, episodes) =
            simulate_recording_with_episodes(&profile, &layout, 10_000, 120.0, 1000 + seed).unwrap();
        for (i, e) in Emotion::ALL.iter().enumerate() {
            shares[i] += emotion_dwell_share(&episodes, *e) / n_seeds as f64;
        }
    }
    for (i, e) in Emotion::ALL.iter().enumerate() {
        let expect = profile.selection_probability(*e);
        assert!(
            (shares[i] - expect).abs() <= 0.05,
            "{}: share {} vs selection probability {}",
            e.name(),
            shares[i],
            expect
        );
    }
}

#[test]
fn detection_recovers_injected_episodes() {
    // >= 90% of injected fixation episodes must overlap a detected
    // fixation on at least half their duration, under default parameters.
    let geom = ViewingGeometry::default();
    let params = DetectionParams::default();
    let layout = default_layout();
    let mut recovered = 0usize;
    let mut total = 0usize;
    for name in ["control", "depressive", "anxious"] {
        let profile = preset_profile(name).unwrap();
        for seed in 0..20 {
            let (rec, episodes) =
                simulate_recording_with_episodes(&profile, &layout, 10_000, 120.0, 3_000 + seed).unwrap();
            let sp = events::build_scanpath(&rec, &params, &geom).unwrap();
            for ep in &episodes {
                total += 1;
                let need = ep.dwell_ms() / 2.0;
                let hit = sp.fixations.iter().any(|f| {
                    let lo = f.start_ms as f64;
                    let hi = f.end_ms as f64;
                    let overlap = (hi.min(ep.end_ms) - lo.max(ep.start_ms)).max(0.0);
                    overlap >= need
                });
                if hit {
                    recovered += 1;
                }
            }
        }
    }
    let rate = recovered as f64 / total as f64;
    assert!(rate >= 0.90, "episode recovery rate {rate} ({recovered}/{total})");
}

#[test]
fn detected_fixations_respect_duration_band_and_saccade_count() {
    let geom = ViewingGeometry::default();
    let params = DetectionParams::default();
    let layout = default_layout();
    let profile = preset_profile("control").unwrap();
    let rec = scanpath_core::simulate::simulate_recording(&profile, &layout, 10_000, 120.0, 1).unwrap();
    let sp = events::build_scanpath(&rec, &params, &geom).unwrap();
    assert!(!sp.fixations.is_empty());
    for f in &sp.fixations {
        let d = f.duration_ms();
        assert!((80..=1200).contains(&d), "duration {d}");
    }
    assert_eq!(sp.saccades.len(), sp.fixations.len() - 1);
    for (i, s) in sp.saccades.iter().enumerate() {
        assert_eq!(s.from_fixation_index, i);
        assert_eq!(s.to_fixation_index, i + 1);
    }
    // Fixations are ordered and non-overlapping.
    for pair in sp.fixations.windows(2) {
        assert!(pair[1].start_ms > pair[0].end_ms);
    }
}

#[test]
fn anxious_cohort_has_more_fixations_than_control() {
    let geom = ViewingGeometry::default();
    let params = DetectionParams::default();
    let layout = default_layout();
    let mut counts = [0usize; 2];
    for (idx, name) in ["control", "anxious"].iter().enumerate() {
        let profile = preset_profile(name).unwrap();
        for seed in 0..30 {
            let rec =
                scanpath_core::simulate::simulate_recording(&profile, &layout, 10_000, 120.0, 7_000 + seed)
                    .unwrap();
            let sp = events::build_scanpath(&rec, &params, &geom).unwrap();
            counts[idx] += sp.fixations.len();
        }
    }
    assert!(
        counts[1] as f64 >= 1.3 * counts[0] as f64,
        "anxious fixation count {} vs control {}",
        counts[1],
        counts[0]
    );
}
