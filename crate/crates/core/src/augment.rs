//! The nine-filter augmentation bank, with fixed bit-exact semantics.
//!
//! Every op passes the alpha channel through unchanged except Canny, which
//! re-materializes an opaque binary edge map (computed from the RGB data,
//! ignoring alpha). Filter semantics:
//!
//! - Negate: `c' = 255 - c` per RGB channel.
//! - Posterize(n): `c' = round(round(c*(n-1)/255) * 255/(n-1))`, i.e. n
//!   evenly spaced levels including 0 and 255.
//! - Gamma(g): `c' = round(255 * (c/255)^(1/g))`.
//! - Modulate(b): HSL lightness scaled to `clamp(L * b/100)`, hue and
//!   saturation unchanged.
//! - Paint(r): each pixel's RGB replaced by the modal color of its
//!   (2r+1)x(2r+1) neighborhood, ties broken by the lowest packed
//!   0xRRGGBB value, borders clamped.
//! - Canny(t): ITU-R 601 luma, Gaussian blur sigma 1.0 (radius 3,
//!   clamped borders), Sobel gradients, 4-direction non-maximum
//!   suppression, hysteresis at t% / 3t% of the max suppressed magnitude
//!   (8-connected), white edges on black.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::raster::RasterImage;

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum AugmentError {
    #[error("invalid augmentation parameter: {0}")]
    InvalidParameter(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AugmentOp {
    Negate,
    Canny { threshold_pct: u8 },
    Posterize { levels: u8 },
    Paint { radius_px: u8 },
    Gamma { gamma: f64 },
    Modulate { brightness_pct: u32 },
}

impl AugmentOp {
    pub fn validate(&self) -> Result<(), AugmentError> {
        match *self {
            AugmentOp::Negate => Ok(()),
            AugmentOp::Canny { threshold_pct } => {
                // High threshold is 3t%, which must stay within 100%.
                if (1..=33).contains(&threshold_pct) {
                    Ok(())
                } else {
                    Err(AugmentError::InvalidParameter("canny threshold must be in 1..=33"))
                }
            }
            AugmentOp::Posterize { levels } => {
                if levels >= 2 {
                    Ok(())
                } else {
                    Err(AugmentError::InvalidParameter("posterize needs at least 2 levels"))
                }
            }
            AugmentOp::Paint { radius_px } => {
                if radius_px >= 1 {
                    Ok(())
                } else {
                    Err(AugmentError::InvalidParameter("paint radius must be >= 1"))
                }
            }
            AugmentOp::Gamma { gamma } => {
                if gamma > 0.0 && gamma.is_finite() {
                    Ok(())
                } else {
                    Err(AugmentError::InvalidParameter("gamma must be positive and finite"))
                }
            }
            AugmentOp::Modulate { brightness_pct } => {
                if brightness_pct > 0 {
                    Ok(())
                } else {
                    Err(AugmentError::InvalidParameter("modulate brightness must be positive"))
                }
            }
        }
    }

    /// Name used in output filenames (`negate`, `canny10`, ...).
    pub fn name(&self) -> String {
        match *self {
            AugmentOp::Negate => String::from("negate"),
            AugmentOp::Canny { threshold_pct } => format!("canny{threshold_pct}"),
            AugmentOp::Posterize { levels } => format!("posterize{levels}"),
            AugmentOp::Paint { radius_px } => format!("paint{radius_px}"),
            AugmentOp::Gamma { gamma } => format!("gamma{gamma}"),
            AugmentOp::Modulate { brightness_pct } => format!("modulate{brightness_pct}"),
        }
    }
}

/// The fixed bank, in application order.
pub fn standard_bank() -> [AugmentOp; 9] {
    [
        AugmentOp::Negate,
        AugmentOp::Canny { threshold_pct: 10 },
        AugmentOp::Posterize { levels: 2 },
        AugmentOp::Posterize { levels: 4 },
        AugmentOp::Paint { radius_px: 1 },
        AugmentOp::Paint { radius_px: 3 },
        AugmentOp::Gamma { gamma: 100.0 },
        AugmentOp::Modulate { brightness_pct: 140 },
        AugmentOp::Modulate { brightness_pct: 160 },
    ]
}

pub fn apply(op: &AugmentOp, img: &RasterImage) -> Result<RasterImage, AugmentError> {
    op.validate()?;
    Ok(match *op {
        AugmentOp::Negate => map_rgb(img, |c| [255 - c[0], 255 - c[1], 255 - c[2]]),
        AugmentOp::Posterize { levels } => {
            let n = levels as f64;
            map_rgb(img, |c| c.map(|v| posterize_channel(v, n)))
        }
        AugmentOp::Gamma { gamma } => {
            // 256-entry lookup keeps the powf count fixed.
            let mut lut = [0u8; 256];
            for (v, out) in lut.iter_mut().enumerate() {
                *out = Float::round(255.0 * (v as f64 / 255.0).powf(1.0 / gamma)) as u8;
            }
            map_rgb(img, |c| c.map(|v| lut[v as usize]))
        }
        AugmentOp::Modulate { brightness_pct } => {
            let factor = brightness_pct as f64 / 100.0;
            map_rgb(img, |c| modulate_pixel(c, factor))
        }
        AugmentOp::Paint { radius_px } => paint(img, radius_px as i64),
        AugmentOp::Canny { threshold_pct } => canny(img, threshold_pct),
    })
}

/// Apply the full bank in its fixed order; returns exactly 9 images.
pub fn augment_all(img: &RasterImage) -> Vec<RasterImage> {
    standard_bank()
        .iter()
        .map(|op| apply(op, img).expect("standard bank parameters are valid"))
        .collect()
}

fn map_rgb(img: &RasterImage, f: impl Fn([u8; 3]) -> [u8; 3]) -> RasterImage {
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(4) {
        let rgb = f([px[0], px[1], px[2]]);
        px[0] = rgb[0];
        px[1] = rgb[1];
        px[2] = rgb[2];
    }
    out
}

fn posterize_channel(v: u8, n: f64) -> u8 {
    let level = Float::round(v as f64 * (n - 1.0) / 255.0);
    Float::round(level * 255.0 / (n - 1.0)).clamp(0.0, 255.0) as u8
}

fn modulate_pixel(rgb: [u8; 3], factor: f64) -> [u8; 3] {
    let (h, s, l) = rgb_to_hsl(rgb);
    let l = (l * factor).clamp(0.0, 1.0);
    hsl_to_rgb(h, s, l)
}

/// Hue in [0, 1), saturation and lightness in [0, 1].
fn rgb_to_hsl(rgb: [u8; 3]) -> (f64, f64, f64) {
    let r = rgb[0] as f64 / 255.0;
    let g = rgb[1] as f64 / 255.0;
    let b = rgb[2] as f64 / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let l = (max + min) / 2.0;
    if max == min {
        return (0.0, 0.0, l);
    }
    let d = max - min;
    let s = if l > 0.5 { d / (2.0 - max - min) } else { d / (max + min) };
    let h = if max == r {
        wrap((g - b) / d, 6.0)
    } else if max == g {
        (b - r) / d + 2.0
    } else {
        (r - g) / d + 4.0
    } / 6.0;
    (h, s, l)
}

fn hsl_to_rgb(h: f64, s: f64, l: f64) -> [u8; 3] {
    if s == 0.0 {
        let v = Float::round(l * 255.0).clamp(0.0, 255.0) as u8;
        return [v, v, v];
    }
    let q = if l < 0.5 { l * (1.0 + s) } else { l + s - l * s };
    let p = 2.0 * l - q;
    let channel = |t: f64| {
        let t = wrap(t, 1.0);
        let v = if t < 1.0 / 6.0 {
            p + (q - p) * 6.0 * t
        } else if t < 0.5 {
            q
        } else if t < 2.0 / 3.0 {
            p + (q - p) * (2.0 / 3.0 - t) * 6.0
        } else {
            p
        };
        Float::round(v * 255.0).clamp(0.0, 255.0) as u8
    };
    [channel(h + 1.0 / 3.0), channel(h), channel(h - 1.0 / 3.0)]
}

/// Euclidean remainder into [0, m); `Float`-only equivalent of
/// `f64::rem_euclid`.
fn wrap(x: f64, m: f64) -> f64 {
    let r = x - m * (x / m).floor();
    if r >= m {
        r - m
    } else {
        r
    }
}

fn pack(rgb: [u8; 3]) -> u32 {
    ((rgb[0] as u32) << 16) | ((rgb[1] as u32) << 8) | rgb[2] as u32
}

fn paint(img: &RasterImage, radius: i64) -> RasterImage {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut out = img.clone();
    let mut window: Vec<u32> = Vec::with_capacity(((2 * radius + 1) * (2 * radius + 1)) as usize);
    for y in 0..h {
        for x in 0..w {
            window.clear();
            for dy in -radius..=radius {
                for dx in -radius..=radius {
                    let sx = (x + dx).clamp(0, w - 1) as u32;
                    let sy = (y + dy).clamp(0, h - 1) as u32;
                    let px = img.get(sx, sy);
                    window.push(pack([px[0], px[1], px[2]]));
                }
            }
            // Mode with ties to the lowest packed value: sort ascending and
            // take the first longest run.
            window.sort_unstable();
            let mut best = window[0];
            let mut best_len = 0usize;
            let mut run_start = 0usize;
            for i in 1..=window.len() {
                if i == window.len() || window[i] != window[run_start] {
                    let len = i - run_start;
                    if len > best_len {
                        best_len = len;
                        best = window[run_start];
                    }
                    run_start = i;
                }
            }
            let alpha = img.get(x as u32, y as u32)[3];
            out.put(
                x as u32,
                y as u32,
                [(best >> 16) as u8, (best >> 8) as u8, best as u8, alpha],
            );
        }
    }
    out
}

fn canny(img: &RasterImage, threshold_pct: u8) -> RasterImage {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let luma: Vec<f64> = img
        .data()
        .chunks_exact(4)
        .map(|px| 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64)
        .collect();

    // Gaussian blur sigma 1.0, radius 3, separable, clamped borders.
    let kernel: Vec<f64> = {
        let raw: Vec<f64> = (-3..=3).map(|i| (-(i as f64 * i as f64) / 2.0).exp()).collect();
        let sum: f64 = raw.iter().sum();
        raw.iter().map(|v| v / sum).collect()
    };
    let clamp_x = |x: i64| x.clamp(0, w as i64 - 1) as usize;
    let clamp_y = |y: i64| y.clamp(0, h as i64 - 1) as usize;
    let mut tmp = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kw) in kernel.iter().enumerate() {
                acc += kw * luma[y * w + clamp_x(x as i64 + k as i64 - 3)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut blurred = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kw) in kernel.iter().enumerate() {
                acc += kw * tmp[clamp_y(y as i64 + k as i64 - 3) * w + x];
            }
            blurred[y * w + x] = acc;
        }
    }

    // Sobel gradients, clamped borders.
    let at = |x: i64, y: i64| blurred[clamp_y(y) * w + clamp_x(x)];
    let mut mag = vec![0.0f64; w * h];
    let mut dir = vec![0.0f64; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let gx = -at(x - 1, y - 1) + at(x + 1, y - 1) - 2.0 * at(x - 1, y) + 2.0 * at(x + 1, y)
                - at(x - 1, y + 1)
                + at(x + 1, y + 1);
            let gy = -at(x - 1, y - 1) - 2.0 * at(x, y - 1) - at(x + 1, y - 1)
                + at(x - 1, y + 1)
                + 2.0 * at(x, y + 1)
                + at(x + 1, y + 1);
            mag[y as usize * w + x as usize] = gx.hypot(gy);
            dir[y as usize * w + x as usize] = gy.atan2(gx);
        }
    }

    // Non-maximum suppression along the quantized gradient direction;
    // missing neighbors count as zero, ties keep the pixel.
    let mag_at = |x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    let mut nms = vec![0.0f64; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let m = mag_at(x, y);
            if m == 0.0 {
                continue;
            }
            let angle = dir[y as usize * w + x as usize].to_degrees();
            let angle = wrap(angle, 180.0);
            let (dx, dy) = if !(22.5..157.5).contains(&angle) {
                (1i64, 0i64)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (1, -1)
            };
            if m >= mag_at(x + dx, y + dy) && m >= mag_at(x - dx, y - dy) {
                nms[y as usize * w + x as usize] = m;
            }
        }
    }

    let max_mag = nms.iter().cloned().fold(0.0f64, f64::max);
    let mut edges = vec![false; w * h];
    if max_mag > 0.0 {
        let low = threshold_pct as f64 / 100.0 * max_mag;
        let high = 3.0 * threshold_pct as f64 / 100.0 * max_mag;
        let mut stack: Vec<(i64, i64)> = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if nms[y * w + x] >= high && !edges[y * w + x] {
                    edges[y * w + x] = true;
                    stack.push((x as i64, y as i64));
                    while let Some((cx, cy)) = stack.pop() {
                        for dy in -1..=1i64 {
                            for dx in -1..=1i64 {
                                let (nx, ny) = (cx + dx, cy + dy);
                                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                                    continue;
                                }
                                let idx = ny as usize * w + nx as usize;
                                if !edges[idx] && nms[idx] >= low {
                                    edges[idx] = true;
                                    stack.push((nx, ny));
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    let mut out = RasterImage::new(img.width(), img.height());
    for (i, px) in out.data_mut().chunks_exact_mut(4).enumerate() {
        let v = if edges[i] { 255 } else { 0 };
        px.copy_from_slice(&[v, v, v, 255]);
    }
    out
}
