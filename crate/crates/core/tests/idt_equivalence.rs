//! Cross-checks the incremental I-DT detector against the naive re-scan
//! reference on simulated recordings, including recordings with injected
//! tracker-loss runs.

use scanpath_core::events::{self, oracle, DetectionParams};
use scanpath_core::gaze::GazeRecording;
use scanpath_core::geometry::ViewingGeometry;
use scanpath_core::rng::Pcg32;
use scanpath_core::simulate::{default_layout, preset_profiles, simulate_recording};

/// Mark a few seeded runs of samples invalid, mimicking tracker loss.
/// Run lengths up to 14 samples (~117 ms at 120 Hz) cross the 75 ms
/// bridge threshold in both directions.
pub fn inject_dropouts(rec: &mut GazeRecording, seed: u64) {
    let mut rng = Pcg32::new(seed, 0xD0);
    let n = rec.samples.len();
    let runs = 2 + rng.next_below(4) as usize;
    for _ in 0..runs {
        let start = rng.next_below(n as u32) as usize;
        let len = 1 + rng.next_below(14) as usize;
        for s in rec.samples.iter_mut().skip(start).take(len) {
            s.valid = false;
        }
    }
}

fn assert_equivalent(rec: &GazeRecording, params: &DetectionParams, geom: &ViewingGeometry) {
    let fast = events::detect_fixations(rec, params, geom).unwrap();
    let naive = oracle::detect_fixations_naive(rec, params, geom).unwrap();
    assert_eq!(fast.len(), naive.len(), "event count differs for {}", rec.participant_id);
    for (a, b) in fast.iter().zip(&naive) {
        assert_eq!(a.start_ms, b.start_ms);
        assert_eq!(a.end_ms, b.end_ms);
        assert_eq!(a.n_samples, b.n_samples);
        assert!((a.centroid_x_px - b.centroid_x_px).abs() < 1e-9);
        assert!((a.centroid_y_px - b.centroid_y_px).abs() < 1e-9);
    }
}

#[test]
fn detector_matches_oracle_on_clean_recordings() {
    let geom = ViewingGeometry::default();
    let params = DetectionParams::default();
    let layout = default_layout();
    for profile in preset_profiles() {
        for seed in 0..25 {
            let rec = simulate_recording(&profile, &layout, 10_000, 120.0, seed).unwrap();
            assert_equivalent(&rec, &params, &geom);
        }
    }
}

#[test]
fn detector_matches_oracle_under_tracker_loss() {
    let geom = ViewingGeometry::default();
    let params = DetectionParams::default();
    let layout = default_layout();
    for profile in preset_profiles() {
        for seed in 100..125 {
            let mut rec = simulate_recording(&profile, &layout, 10_000, 120.0, seed).unwrap();
            inject_dropouts(&mut rec, seed);
            assert_equivalent(&rec, &params, &geom);
        }
    }
}

#[test]
fn detector_matches_oracle_with_odd_parameters() {
    let geom = ViewingGeometry::default();
    let layout = default_layout();
    let profile = &preset_profiles()[0];
    let variants = [
        DetectionParams { dispersion_threshold_deg: 0.5, ..DetectionParams::default() },
        DetectionParams { dispersion_threshold_deg: 2.0, min_duration_ms: 120, ..DetectionParams::default() },
        DetectionParams { max_gap_ms: 10, ..DetectionParams::default() },
        DetectionParams { max_gap_ms: 200, ..DetectionParams::default() },
    ];
    for (i, params) in variants.iter().enumerate() {
        for seed in 0..10 {
            let mut rec = simulate_recording(profile, &layout, 10_000, 120.0, 500 + seed).unwrap();
            if seed % 2 == 0 {
                inject_dropouts(&mut rec, 900 + i as u64 * 10 + seed);
            }
            assert_equivalent(&rec, params, &geom);
        }
    }
}
