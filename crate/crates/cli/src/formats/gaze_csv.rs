//! The gaze-recording wire format.
//!
//! Samples: a CSV whose first line is exactly `t_ms,x_px,y_px,valid`,
//! followed by `<int>,<float>,<float>,<0|1>` rows. Coordinates print in
//! Rust's shortest round-trip form, so write -> parse reproduces every
//! sample bit for bit. Participant metadata lives in a `<stem>.meta.json`
//! sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use scanpath_core::gaze::{GazeRecording, GazeSample, GroupLabel, RecordingMeta};
use serde::{Deserialize, Serialize};

pub const HEADER: &str = "t_ms,x_px,y_px,valid";

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum GazeCsvError {
    #[error("malformed header: expected `{HEADER}`")]
    MalformedHeader,
    #[error("timestamps not strictly increasing at line {line}")]
    NonMonotonicTimestamp { line: usize },
    #[error("recording has no sample rows")]
    EmptyRecording,
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: &'static str },
}

/// Parse the sample CSV (not the sidecar).
pub fn parse_gaze_csv(text: &str) -> Result<Vec<GazeSample>, GazeCsvError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == HEADER => {}
        _ => return Err(GazeCsvError::MalformedHeader),
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let t_ms = fields
            .next()
            .and_then(|f| f.parse::<i64>().ok())
            .ok_or(GazeCsvError::MalformedRow { line: line_no, reason: "bad t_ms" })?;
        if t_ms < 0 {
            return Err(GazeCsvError::MalformedRow { line: line_no, reason: "negative t_ms" });
        }
        let x_px = fields
            .next()
            .and_then(|f| f.parse::<f64>().ok())
            .ok_or(GazeCsvError::MalformedRow { line: line_no, reason: "bad x_px" })?;
        let y_px = fields
            .next()
            .and_then(|f| f.parse::<f64>().ok())
            .ok_or(GazeCsvError::MalformedRow { line: line_no, reason: "bad y_px" })?;
        let valid = match fields.next() {
            Some("0") => false,
            Some("1") => true,
            _ => return Err(GazeCsvError::MalformedRow { line: line_no, reason: "valid must be 0 or 1" }),
        };
        if fields.next().is_some() {
            return Err(GazeCsvError::MalformedRow { line: line_no, reason: "too many fields" });
        }
        if let Some(prev) = samples.last() {
            let prev: &GazeSample = prev;
            if t_ms <= prev.t_ms {
                return Err(GazeCsvError::NonMonotonicTimestamp { line: line_no });
            }
        }
        samples.push(GazeSample { t_ms, x_px, y_px, valid });
    }
    if samples.is_empty() {
        return Err(GazeCsvError::EmptyRecording);
    }
    Ok(samples)
}

pub fn write_gaze_csv(samples: &[GazeSample]) -> String {
    let mut out = String::with_capacity(samples.len() * 24 + HEADER.len() + 1);
    out.push_str(HEADER);
    out.push('\n');
    for s in samples {
        out.push_str(&format!("{},{},{},{}\n", s.t_ms, s.x_px, s.y_px, if s.valid { 1 } else { 0 }));
    }
    out
}

/// The `<stem>.meta.json` sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaSidecar {
    pub participant_id: String,
    pub group: GroupLabel,
    #[serde(default = "default_rate")]
    pub rate_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cesd_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lsas_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sex: Option<String>,
}

fn default_rate() -> f64 {
    120.0
}

impl MetaSidecar {
    pub fn from_recording(rec: &GazeRecording) -> Self {
        MetaSidecar {
            participant_id: rec.participant_id.clone(),
            group: rec.group,
            rate_hz: rec.rate_hz,
            cesd_score: rec.meta.cesd_score,
            lsas_score: rec.meta.lsas_score,
            age: rec.meta.age,
            sex: rec.meta.sex.clone(),
        }
    }
}

fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Write `<id>.csv` and `<id>.meta.json` into `dir`; returns the CSV path.
pub fn write_recording(dir: &Path, rec: &GazeRecording) -> std::io::Result<PathBuf> {
    let csv_path = dir.join(format!("{}.csv", rec.participant_id));
    fs::write(&csv_path, write_gaze_csv(&rec.samples))?;
    let meta = MetaSidecar::from_recording(rec);
    let json = serde_json::to_string_pretty(&meta).expect("sidecar serializes");
    fs::write(meta_path(&csv_path), json + "\n")?;
    Ok(csv_path)
}

#[derive(Debug, thiserror::Error)]
pub enum RecordingIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        source: GazeCsvError,
    },
    #[error("{path}: invalid metadata sidecar: {source}")]
    Meta {
        path: PathBuf,
        source: serde_json::Error,
    },
}

/// Read one recording from its CSV path plus the metadata sidecar.
pub fn read_recording(csv_path: &Path) -> Result<GazeRecording, RecordingIoError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RecordingIoError::Io { path, source }
    };
    let text = fs::read_to_string(csv_path).map_err(io_err(csv_path))?;
    let samples = parse_gaze_csv(&text)
        .map_err(|source| RecordingIoError::Csv { path: csv_path.to_path_buf(), source })?;
    let mpath = meta_path(csv_path);
    let meta_text = fs::read_to_string(&mpath).map_err(io_err(&mpath))?;
    let sidecar: MetaSidecar = serde_json::from_str(&meta_text)
        .map_err(|source| RecordingIoError::Meta { path: mpath, source })?;
    Ok(GazeRecording {
        participant_id: sidecar.participant_id,
        group: sidecar.group,
        rate_hz: sidecar.rate_hz,
        samples,
        meta: RecordingMeta {
            cesd_score: sidecar.cesd_score,
            lsas_score: sidecar.lsas_score,
            age: sidecar.age,
            sex: sidecar.sex,
        },
    })
}

/// All recordings in a directory, in filename order.
pub fn read_gaze_dir(dir: &Path) -> Result<Vec<GazeRecording>, RecordingIoError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|source| RecordingIoError::Io { path: dir.to_path_buf(), source })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_recording(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_at_120hz_parse_with_count() {
        let mut text = String::from("t_ms,x_px,y_px,valid\n");
        for i in 0..1200i64 {
            let t = (i as f64 * 1000.0 / 120.0).round() as i64;
            text.push_str(&format!("{t},840.5,525.25,1\n"));
        }
        let samples = parse_gaze_csv(&text).unwrap();
        assert_eq!(samples.len(), 1200);
        assert_eq!(samples[1].t_ms, 8);
        assert!(samples[0].valid);
    }

    #[test]
    fn header_and_empty_and_order_errors() {
        assert_eq!(parse_gaze_csv("x,y\n1,2\n"), Err(GazeCsvError::MalformedHeader));
        assert_eq!(parse_gaze_csv("t_ms,x_px,y_px,valid\n"), Err(GazeCsvError::EmptyRecording));
        let text = "t_ms,x_px,y_px,valid\n16,1,1,1\n8,1,1,1\n";
        assert_eq!(parse_gaze_csv(text), Err(GazeCsvError::NonMonotonicTimestamp { line: 3 }));
        let text = "t_ms,x_px,y_px,valid\n1,2,3,maybe\n";
        assert!(matches!(parse_gaze_csv(text), Err(GazeCsvError::MalformedRow { line: 2, .. })));
    }

    #[test]
    fn single_sample_writes_two_lines() {
        let samples = [GazeSample { t_ms: 0, x_px: 840.0, y_px: 525.0, valid: true }];
        let text = write_gaze_csv(&samples);
        assert_eq!(text, "t_ms,x_px,y_px,valid\n0,840,525,1\n");
        assert_eq!(text.trim_end().lines().count(), 2);
    }

    #[test]
    fn parse_write_roundtrip_preserves_bits() {
        let samples = vec![
            GazeSample { t_ms: 0, x_px: 0.1 + 0.2, y_px: 1.0 / 3.0, valid: true },
            GazeSample { t_ms: 8, x_px: f64::MIN_POSITIVE, y_px: 1679.999999999, valid: false },
            GazeSample { t_ms: 17, x_px: -4.25, y_px: 0.0, valid: true },
        ];
        let parsed = parse_gaze_csv(&write_gaze_csv(&samples)).unwrap();
        assert_eq!(parsed, samples);
    }
}
