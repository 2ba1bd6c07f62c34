//! Rasterize scan paths into classifier-ready square images.
//!
//! Two styles: fixation-overlay (duration-scaled discs plus connecting
//! strokes for passing saccades) and raw-polyline (segments joining the
//! valid sample trail). Drawing happens at source-canvas scale; the canvas
//! is then letterboxed onto a square output with premultiplied bilinear
//! resampling. Strokes rasterize through a coverage mask so overlapping
//! segments blend once, keeping stroke alpha uniform along the path.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::events::ScanPath;
use crate::raster::{resize_premultiplied, RasterImage};

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("invalid render config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RenderStyle {
    /// Dataset-A style: fixation discs plus passing-saccade strokes.
    FixationOverlay,
    /// Dataset-B style: the raw valid-sample trail, no discs.
    RawPolyline,
}

impl RenderStyle {
    pub fn name(self) -> &'static str {
        match self {
            RenderStyle::FixationOverlay => "overlay",
            RenderStyle::RawPolyline => "polyline",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Background {
    Transparent,
    Opaque([u8; 3]),
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RenderConfig {
    pub style: RenderStyle,
    /// Coordinate space the gaze data lives in (the stimulus screen).
    pub source_canvas: (u32, u32),
    /// Side of the square output image.
    pub output_size: u32,
    pub background: Background,
    pub stroke_rgba: [u8; 4],
    /// Stroke width at source-canvas scale.
    pub stroke_width_px: f64,
    /// Disc radius law at source scale: r = r_min + k * duration_ms.
    pub circle_r_min_px: f64,
    pub circle_r_k: f64,
    pub circle_alpha: u8,
}

impl RenderConfig {
    /// Fixation-overlay defaults: 224 px output, red strokes on
    /// transparent background.
    pub fn overlay() -> Self {
        RenderConfig {
            style: RenderStyle::FixationOverlay,
            source_canvas: (1680, 1050),
            output_size: 224,
            background: Background::Transparent,
            stroke_rgba: [220, 30, 30, 200],
            stroke_width_px: 3.0,
            circle_r_min_px: 4.0,
            circle_r_k: 0.02,
            circle_alpha: 200,
        }
    }

    /// Raw-polyline defaults: 448 px output, transparent background.
    pub fn polyline() -> Self {
        RenderConfig {
            style: RenderStyle::RawPolyline,
            output_size: 448,
            ..Self::overlay()
        }
    }

    pub fn for_style(style: RenderStyle) -> Self {
        match style {
            RenderStyle::FixationOverlay => Self::overlay(),
            RenderStyle::RawPolyline => Self::polyline(),
        }
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if self.output_size < 32 {
            return Err(RenderError::InvalidConfig("output size must be >= 32"));
        }
        if self.source_canvas.0 == 0 || self.source_canvas.1 == 0 {
            return Err(RenderError::InvalidConfig("source canvas must be non-empty"));
        }
        if !(self.circle_r_min_px > 0.0) {
            return Err(RenderError::InvalidConfig("circle r_min must be positive"));
        }
        if self.circle_r_k < 0.0 {
            return Err(RenderError::InvalidConfig("circle radius slope must be >= 0"));
        }
        if !(self.stroke_width_px > 0.0) {
            return Err(RenderError::InvalidConfig("stroke width must be positive"));
        }
        Ok(())
    }
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self::overlay()
    }
}

/// Render a scan path. Deterministic: identical inputs produce
/// bit-identical images. Saccades with `passes_filter == false` contribute
/// no stroke pixels (the polyline simply breaks there).
pub fn render_scanpath(sp: &ScanPath, cfg: &RenderConfig) -> Result<RasterImage, RenderError> {
    cfg.validate()?;
    let (w, h) = cfg.source_canvas;
    let bg = match cfg.background {
        Background::Transparent => [0, 0, 0, 0],
        Background::Opaque([r, g, b]) => [r, g, b, 255],
    };
    let mut canvas = RasterImage::filled(w, h, bg);

    match cfg.style {
        RenderStyle::FixationOverlay => {
            let mut mask = CoverageMask::new(w, h);
            for s in &sp.saccades {
                if !s.passes_filter {
                    continue;
                }
                let a = &sp.fixations[s.from_fixation_index];
                let b = &sp.fixations[s.to_fixation_index];
                mask.add_segment(
                    (a.centroid_x_px, a.centroid_y_px),
                    (b.centroid_x_px, b.centroid_y_px),
                    cfg.stroke_width_px / 2.0,
                );
            }
            mask.blend_into(&mut canvas, cfg.stroke_rgba);
            let circle_rgba = [cfg.stroke_rgba[0], cfg.stroke_rgba[1], cfg.stroke_rgba[2], cfg.circle_alpha];
            for f in &sp.fixations {
                let r = cfg.circle_r_min_px + cfg.circle_r_k * f.duration_ms() as f64;
                draw_disc(&mut canvas, (f.centroid_x_px, f.centroid_y_px), r, circle_rgba);
            }
        }
        RenderStyle::RawPolyline => {
            let mut mask = CoverageMask::new(w, h);
            for pair in sp.raw_polyline.windows(2) {
                mask.add_segment(pair[0], pair[1], cfg.stroke_width_px / 2.0);
            }
            mask.blend_into(&mut canvas, cfg.stroke_rgba);
        }
    }

    Ok(letterbox(&canvas, cfg.output_size, bg))
}

/// Scale to fit the square output, centered, bars filled with the
/// background.
fn letterbox(canvas: &RasterImage, out: u32, bg: [u8; 4]) -> RasterImage {
    let (w, h) = (canvas.width(), canvas.height());
    let scale = out as f64 / w.max(h) as f64;
    let cw = (Float::round(w as f64 * scale) as u32).clamp(1, out);
    let ch = (Float::round(h as f64 * scale) as u32).clamp(1, out);
    let content = resize_premultiplied(canvas, cw, ch);
    let mut output = RasterImage::filled(out, out, bg);
    let ox = (out - cw) / 2;
    let oy = (out - ch) / 2;
    for y in 0..ch {
        for x in 0..cw {
            output.blend(ox + x, oy + y, content.get(x, y));
        }
    }
    output
}

/// Boolean coverage over the canvas; marked pixels get one blend pass.
struct CoverageMask {
    width: u32,
    height: u32,
    hit: Vec<bool>,
}

impl CoverageMask {
    fn new(width: u32, height: u32) -> Self {
        CoverageMask { width, height, hit: vec![false; width as usize * height as usize] }
    }

    /// Mark every pixel whose center lies within `half_width` of the
    /// segment (a capsule).
    fn add_segment(&mut self, p0: (f64, f64), p1: (f64, f64), half_width: f64) {
        let min_x = (p0.0.min(p1.0) - half_width - 1.0).floor().max(0.0) as u32;
        let max_x = (p0.0.max(p1.0) + half_width + 1.0).ceil().min(self.width as f64 - 1.0) as u32;
        let min_y = (p0.1.min(p1.1) - half_width - 1.0).floor().max(0.0) as u32;
        let max_y = (p0.1.max(p1.1) + half_width + 1.0).ceil().min(self.height as f64 - 1.0) as u32;
        let hw2 = half_width * half_width;
        for y in min_y..=max_y {
            for x in min_x..=max_x {
                let c = (x as f64 + 0.5, y as f64 + 0.5);
                if dist2_to_segment(c, p0, p1) <= hw2 {
                    self.hit[(y * self.width + x) as usize] = true;
                }
            }
        }
    }

    fn blend_into(&self, img: &mut RasterImage, rgba: [u8; 4]) {
        for y in 0..self.height {
            for x in 0..self.width {
                if self.hit[(y * self.width + x) as usize] {
                    img.blend(x, y, rgba);
                }
            }
        }
    }
}

fn dist2_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let ab = (b.0 - a.0, b.1 - a.1);
    let ap = (p.0 - a.0, p.1 - a.1);
    let len2 = ab.0 * ab.0 + ab.1 * ab.1;
    let t = if len2 > 0.0 {
        ((ap.0 * ab.0 + ap.1 * ab.1) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let dx = ap.0 - t * ab.0;
    let dy = ap.1 - t * ab.1;
    dx * dx + dy * dy
}

/// Blend a filled hard-edged disc (pixel centers within radius).
fn draw_disc(img: &mut RasterImage, center: (f64, f64), radius: f64, rgba: [u8; 4]) {
    let min_x = (center.0 - radius - 1.0).floor().max(0.0) as u32;
    let max_x = (center.0 + radius + 1.0).ceil().min(img.width() as f64 - 1.0) as u32;
    let min_y = (center.1 - radius - 1.0).floor().max(0.0) as u32;
    let max_y = (center.1 + radius + 1.0).ceil().min(img.height() as f64 - 1.0) as u32;
    let r2 = radius * radius;
    for y in min_y..=max_y {
        for x in min_x..=max_x {
            let dx = x as f64 + 0.5 - center.0;
            let dy = y as f64 + 0.5 - center.1;
            if dx * dx + dy * dy <= r2 {
                img.blend(x, y, rgba);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{Fixation, Saccade, ScanPath};
    use crate::gaze::GroupLabel;
    use alloc::string::ToString;

    fn scanpath(fixations: Vec<Fixation>, saccades: Vec<Saccade>, polyline: Vec<(f64, f64)>) -> ScanPath {
        ScanPath {
            participant_id: "t".to_string(),
            group: GroupLabel::Control,
            fixations,
            saccades,
            raw_polyline: polyline,
        }
    }

    fn fix(x: f64, y: f64, dur: i64) -> Fixation {
        Fixation { start_ms: 0, end_ms: dur, centroid_x_px: x, centroid_y_px: y, n_samples: 10 }
    }

    fn alpha_stats(img: &RasterImage) -> (usize, f64, f64) {
        let mut count = 0usize;
        let (mut sx, mut sy, mut sa) = (0.0, 0.0, 0.0);
        for (x, y, px) in img.pixels() {
            if px[3] > 0 {
                count += 1;
                let a = px[3] as f64;
                sx += x as f64 * a;
                sy += y as f64 * a;
                sa += a;
            }
        }
        if sa > 0.0 {
            (count, sx / sa, sy / sa)
        } else {
            (0, 0.0, 0.0)
        }
    }

    #[test]
    fn empty_scanpath_renders_fully_transparent() {
        let sp = scanpath(vec![], vec![], vec![]);
        let img = render_scanpath(&sp, &RenderConfig::overlay()).unwrap();
        assert_eq!(img.width(), 224);
        assert!(img.data().chunks_exact(4).all(|p| p[3] == 0));
    }

    #[test]
    fn center_fixation_maps_to_output_center() {
        let sp = scanpath(vec![fix(840.0, 525.0, 300)], vec![], vec![]);
        let img = render_scanpath(&sp, &RenderConfig::overlay()).unwrap();
        let (count, cx, cy) = alpha_stats(&img);
        assert!(count > 0);
        assert!((cx - 112.0).abs() <= 1.0, "cx {cx}");
        assert!((cy - 112.0).abs() <= 1.0, "cy {cy}");
    }

    #[test]
    fn longer_polyline_adds_pixels() {
        let mut points = Vec::new();
        for i in 0..300 {
            let cluster = i / 100;
            let base = [(200.0, 200.0), (1200.0, 400.0), (700.0, 900.0)][cluster];
            points.push((base.0 + (i % 100) as f64, base.1 + ((i * 7) % 50) as f64));
        }
        let full = scanpath(vec![], vec![], points.clone());
        let prefix = scanpath(vec![], vec![], points[..200].to_vec());
        let cfg = RenderConfig::polyline();
        let img_full = render_scanpath(&full, &cfg).unwrap();
        let img_prefix = render_scanpath(&prefix, &cfg).unwrap();
        let count = |img: &RasterImage| img.data().chunks_exact(4).filter(|p| p[3] > 0).count();
        assert!(count(&img_full) > count(&img_prefix));
    }

    #[test]
    fn rendering_is_deterministic() {
        let sp = scanpath(
            vec![fix(300.0, 300.0, 200), fix(330.0, 310.0, 400)],
            vec![Saccade { from_fixation_index: 0, to_fixation_index: 1, amplitude_deg: 1.0, passes_filter: true }],
            vec![],
        );
        let cfg = RenderConfig::overlay();
        assert_eq!(render_scanpath(&sp, &cfg).unwrap(), render_scanpath(&sp, &cfg).unwrap());
    }

    #[test]
    fn failing_saccade_adds_no_stroke_pixels() {
        let fixations = vec![fix(200.0, 500.0, 300), fix(1400.0, 500.0, 300)];
        let failing = Saccade {
            from_fixation_index: 0,
            to_fixation_index: 1,
            amplitude_deg: 22.0,
            passes_filter: false,
        };
        let with = scanpath(fixations.clone(), vec![failing], vec![]);
        let without = scanpath(fixations, vec![], vec![]);
        let cfg = RenderConfig::overlay();
        assert_eq!(render_scanpath(&with, &cfg).unwrap(), render_scanpath(&without, &cfg).unwrap());
    }

    #[test]
    fn translation_shifts_drawn_mass() {
        // Square canvas at output scale 1 so shifts map one-to-one.
        let cfg = RenderConfig {
            source_canvas: (512, 512),
            output_size: 512,
            ..RenderConfig::polyline()
        };
        let base: Vec<(f64, f64)> = (0..60)
            .map(|i| (100.0 + 3.0 * i as f64, 150.0 + ((i * 13) % 80) as f64))
            .collect();
        let shifted: Vec<(f64, f64)> = base.iter().map(|&(x, y)| (x + 40.0, y + 25.0)).collect();
        let img_a = render_scanpath(&scanpath(vec![], vec![], base), &cfg).unwrap();
        let img_b = render_scanpath(&scanpath(vec![], vec![], shifted), &cfg).unwrap();
        let (_, ax, ay) = alpha_stats(&img_a);
        let (_, bx, by) = alpha_stats(&img_b);
        assert!((bx - ax - 40.0).abs() <= 1.0, "dx {}", bx - ax);
        assert!((by - ay - 25.0).abs() <= 1.0, "dy {}", by - ay);
    }

    #[test]
    fn opaque_background_fills_bars() {
        let cfg = RenderConfig {
            background: Background::Opaque([10, 20, 30]),
            ..RenderConfig::overlay()
        };
        let img = render_scanpath(&scanpath(vec![], vec![], vec![]), &cfg).unwrap();
        assert!(img.data().chunks_exact(4).all(|p| p == [10, 20, 30, 255]));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = RenderConfig { output_size: 16, ..RenderConfig::overlay() };
        assert_eq!(
            render_scanpath(&scanpath(vec![], vec![], vec![]), &cfg),
            Err(RenderError::InvalidConfig("output size must be >= 32"))
        );
        let cfg = RenderConfig { circle_r_min_px: 0.0, ..RenderConfig::overlay() };
        assert!(cfg.validate().is_err());
    }
}
