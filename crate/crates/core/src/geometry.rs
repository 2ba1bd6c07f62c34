//! Pixel / visual-angle conversions and point-set dispersion.

use num_traits::Float;

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid viewing geometry: {0}")]
    InvalidGeometry(&'static str),
    #[error("dispersion of an empty point set")]
    EmptyPointSet,
}

/// Screen + observer layout. Distances in millimeters, resolution in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ViewingGeometry {
    pub screen_width_px: u32,
    pub screen_height_px: u32,
    pub screen_width_mm: f64,
    pub screen_height_mm: f64,
    pub viewing_distance_mm: f64,
}

impl Default for ViewingGeometry {
    /// 1680x1050 on a 22-inch 16:10 panel (473.76 x 296.1 mm) at 60 cm,
    /// i.e. a pixel pitch of exactly 0.282 mm.
    fn default() -> Self {
        ViewingGeometry {
            screen_width_px: 1680,
            screen_height_px: 1050,
            screen_width_mm: 473.76,
            screen_height_mm: 296.1,
            viewing_distance_mm: 600.0,
        }
    }
}

impl ViewingGeometry {
    pub fn new(
        screen_px: (u32, u32),
        screen_mm: (f64, f64),
        viewing_distance_mm: f64,
    ) -> Result<Self, GeometryError> {
        let geom = ViewingGeometry {
            screen_width_px: screen_px.0,
            screen_height_px: screen_px.1,
            screen_width_mm: screen_mm.0,
            screen_height_mm: screen_mm.1,
            viewing_distance_mm,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.screen_width_px == 0 || self.screen_height_px == 0 {
            return Err(GeometryError::InvalidGeometry("zero screen resolution"));
        }
        if !(self.screen_width_mm > 0.0) || !(self.screen_height_mm > 0.0) {
            return Err(GeometryError::InvalidGeometry("non-positive screen size"));
        }
        if !(self.viewing_distance_mm > 0.0) {
            return Err(GeometryError::InvalidGeometry("non-positive viewing distance"));
        }
        let px = self.screen_width_mm / self.screen_width_px as f64;
        let py = self.screen_height_mm / self.screen_height_px as f64;
        // Square-pixel assumption: horizontal and vertical pitch within 2%.
        if (px - py).abs() / px > 0.02 {
            return Err(GeometryError::InvalidGeometry("pixel pitch not square within 2%"));
        }
        Ok(())
    }

    /// Pixel pitch in mm (horizontal; validated equal to vertical within 2%).
    pub fn px_pitch_mm(&self) -> f64 {
        self.screen_width_mm / self.screen_width_px as f64
    }

    /// On-screen extent in pixels of `angle_deg` of visual angle, measured
    /// symmetrically about the line of sight: `2 d tan(a/2) / pitch`.
    pub fn degrees_to_pixels(&self, angle_deg: f64) -> f64 {
        let half = (angle_deg / 2.0).to_radians();
        2.0 * self.viewing_distance_mm * half.tan() / self.px_pitch_mm()
    }

    /// Exact inverse of [`degrees_to_pixels`](Self::degrees_to_pixels).
    pub fn pixels_to_degrees(&self, dist_px: f64) -> f64 {
        let half = (dist_px * self.px_pitch_mm() / (2.0 * self.viewing_distance_mm)).atan();
        (2.0 * half).to_degrees()
    }
}

/// Salvucci–Goldberg dispersion of a point set: (max x − min x) + (max y − min y).
pub fn dispersion(points: &[(f64, f64)]) -> Result<f64, GeometryError> {
    let (first, rest) = points.split_first().ok_or(GeometryError::EmptyPointSet)?;
    let mut min_x = first.0;
    let mut max_x = first.0;
    let mut min_y = first.1;
    let mut max_y = first.1;
    for &(x, y) in rest {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    Ok((max_x - min_x) + (max_y - min_y))
}
