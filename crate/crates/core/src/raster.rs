//! 8-bit RGBA raster images and deterministic bilinear resampling.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

/// Row-major RGBA8 pixel grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RasterImage {
    /// Fully transparent image.
    pub fn new(width: u32, height: u32) -> Self {
        RasterImage {
            width,
            height,
            data: vec![0; width as usize * height as usize * 4],
        }
    }

    /// Image filled with one RGBA value.
    pub fn filled(width: u32, height: u32, rgba: [u8; 4]) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize * 4);
        for _ in 0..width as usize * height as usize {
            data.extend_from_slice(&rgba);
        }
        RasterImage { width, height, data }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Option<Self> {
        if data.len() == width as usize * height as usize * 4 {
            Some(RasterImage { width, height, data })
        } else {
            None
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    #[inline]
    fn idx(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 4
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 4] {
        let i = self.idx(x, y);
        [self.data[i], self.data[i + 1], self.data[i + 2], self.data[i + 3]]
    }

    #[inline]
    pub fn put(&mut self, x: u32, y: u32, rgba: [u8; 4]) {
        let i = self.idx(x, y);
        self.data[i..i + 4].copy_from_slice(&rgba);
    }

    /// Source-over blend of a straight-alpha color onto the pixel.
    pub fn blend(&mut self, x: u32, y: u32, rgba: [u8; 4]) {
        let dst = self.get(x, y);
        let sa = rgba[3] as f64 / 255.0;
        let da = dst[3] as f64 / 255.0;
        let oa = sa + da * (1.0 - sa);
        if oa <= 0.0 {
            self.put(x, y, [0, 0, 0, 0]);
            return;
        }
        let mut out = [0u8; 4];
        for c in 0..3 {
            let v = (rgba[c] as f64 * sa + dst[c] as f64 * da * (1.0 - sa)) / oa;
            out[c] = Float::round(v).clamp(0.0, 255.0) as u8;
        }
        out[3] = Float::round(oa * 255.0).clamp(0.0, 255.0) as u8;
        self.put(x, y, out);
    }

    /// Iterator over (x, y, rgba).
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32, [u8; 4])> + '_ {
        let w = self.width;
        self.data.chunks_exact(4).enumerate().map(move |(i, px)| {
            let x = (i as u32) % w;
            let y = (i as u32) / w;
            (x, y, [px[0], px[1], px[2], px[3]])
        })
    }
}

/// Precomputed sample taps for one output coordinate.
struct Taps {
    start: usize,
    weights: Vec<f64>,
}

/// Triangle-kernel taps for resampling `src_len` samples to `dst_len`.
/// When downscaling, the kernel support widens by the scale ratio so every
/// source sample contributes (area-style bilinear); when upscaling it is
/// the classic two-tap bilinear kernel. Out-of-range taps clamp to the
/// edge. Weights are normalized to sum to 1.
fn triangle_taps(src_len: u32, dst_len: u32) -> Vec<Taps> {
    let ratio = src_len as f64 / dst_len as f64;
    let support = ratio.max(1.0);
    let mut all = Vec::with_capacity(dst_len as usize);
    for d in 0..dst_len {
        let center = (d as f64 + 0.5) * ratio - 0.5;
        let lo = Float::ceil(center - support) as i64;
        let hi = Float::floor(center + support) as i64;
        let mut weights = Vec::with_capacity((hi - lo + 1) as usize);
        let mut sum = 0.0;
        for i in lo..=hi {
            let w = 1.0 - (i as f64 - center).abs() / support;
            let w = w.max(0.0);
            weights.push(w);
            sum += w;
        }
        for w in &mut weights {
            *w /= sum;
        }
        // Clamp tap indices by folding out-of-range weight onto the edge.
        let max_i = src_len as i64 - 1;
        let mut folded = vec![0.0; (hi.min(max_i).max(0) - lo.max(0).min(max_i) + 1) as usize];
        let start = lo.clamp(0, max_i);
        for (k, i) in (lo..=hi).enumerate() {
            let clamped = i.clamp(0, max_i);
            folded[(clamped - start) as usize] += weights[k];
        }
        all.push(Taps { start: start as usize, weights: folded });
    }
    all
}

fn resample_planes(planes: &[Vec<f64>], w: u32, h: u32, tw: u32, th: u32) -> Vec<Vec<f64>> {
    let xtaps = triangle_taps(w, tw);
    let ytaps = triangle_taps(h, th);
    planes
        .iter()
        .map(|plane| {
            // Horizontal pass.
            let mut tmp = vec![0.0f64; tw as usize * h as usize];
            for y in 0..h as usize {
                let row = &plane[y * w as usize..(y + 1) * w as usize];
                for (x, taps) in xtaps.iter().enumerate() {
                    let mut acc = 0.0;
                    for (k, &wt) in taps.weights.iter().enumerate() {
                        acc += wt * row[taps.start + k];
                    }
                    tmp[y * tw as usize + x] = acc;
                }
            }
            // Vertical pass.
            let mut out = vec![0.0f64; tw as usize * th as usize];
            for (y, taps) in ytaps.iter().enumerate() {
                for x in 0..tw as usize {
                    let mut acc = 0.0;
                    for (k, &wt) in taps.weights.iter().enumerate() {
                        acc += wt * tmp[(taps.start + k) * tw as usize + x];
                    }
                    out[y * tw as usize + x] = acc;
                }
            }
            out
        })
        .collect()
}

fn to_planes(img: &RasterImage) -> [Vec<f64>; 4] {
    let n = img.width as usize * img.height as usize;
    let mut planes = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for (i, px) in img.data.chunks_exact(4).enumerate() {
        for c in 0..4 {
            planes[c][i] = px[c] as f64;
        }
    }
    planes
}

fn quantize(v: f64) -> u8 {
    Float::round(v).clamp(0.0, 255.0) as u8
}

/// Bilinear resample to an arbitrary size, straight alpha, each channel
/// independently. Deterministic; resizing to the own size is the identity.
pub fn resize_exact(img: &RasterImage, target_w: u32, target_h: u32) -> RasterImage {
    assert!(target_w >= 1 && target_h >= 1, "resize target must be positive");
    let planes = to_planes(img);
    let resized = resample_planes(&planes, img.width, img.height, target_w, target_h);
    let n = target_w as usize * target_h as usize;
    let mut data = vec![0u8; n * 4];
    for i in 0..n {
        for c in 0..4 {
            data[i * 4 + c] = quantize(resized[c][i]);
        }
    }
    RasterImage { width: target_w, height: target_h, data }
}

/// Square bilinear resize (the classifier input path).
pub fn resize(img: &RasterImage, target: u32) -> RasterImage {
    resize_exact(img, target, target)
}

/// Bilinear resample with the color channels premultiplied by alpha during
/// filtering, which keeps transparent-background strokes from darkening at
/// their edges. Used by the renderer's letterbox step.
pub fn resize_premultiplied(img: &RasterImage, target_w: u32, target_h: u32) -> RasterImage {
    let n = img.width as usize * img.height as usize;
    let mut planes = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for (i, px) in img.data.chunks_exact(4).enumerate() {
        let a = px[3] as f64 / 255.0;
        for c in 0..3 {
            planes[c][i] = px[c] as f64 * a;
        }
        planes[3][i] = px[3] as f64;
    }
    let resized = resample_planes(&planes, img.width, img.height, target_w, target_h);
    let m = target_w as usize * target_h as usize;
    let mut data = vec![0u8; m * 4];
    for i in 0..m {
        let a = resized[3][i] / 255.0;
        for c in 0..3 {
            let v = if a > 0.0 { resized[c][i] / a } else { 0.0 };
            data[i * 4 + c] = quantize(v);
        }
        data[i * 4 + 3] = quantize(resized[3][i]);
    }
    RasterImage { width: target_w, height: target_h, data }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Pcg32;

    #[test]
    fn resize_to_own_size_is_identity() {
        let mut rng = Pcg32::new(2, 0);
        let mut img = RasterImage::new(33, 17);
        for v in img.data_mut() {
            *v = (rng.next_u32() & 0xFF) as u8;
        }
        assert_eq!(resize_exact(&img, 33, 17), img);
    }

    #[test]
    fn solid_color_survives_downscale() {
        let img = RasterImage::filled(448, 448, [17, 200, 99, 255]);
        let out = resize(&img, 224);
        assert_eq!(out.width(), 224);
        assert!(out.data().chunks_exact(4).all(|p| p == [17, 200, 99, 255]));
    }

    #[test]
    fn checkerboard_downscale_preserves_mean() {
        let mut img = RasterImage::new(448, 448);
        for y in 0..448 {
            for x in 0..448 {
                let v = if (x + y) % 2 == 0 { 255 } else { 0 };
                img.put(x, y, [v, v, v, 255]);
            }
        }
        let out = resize(&img, 224);
        let mean = |im: &RasterImage| {
            let sum: f64 = im.data().chunks_exact(4).map(|p| p[0] as f64).sum();
            sum / (im.width() as f64 * im.height() as f64)
        };
        assert!((mean(&img) - mean(&out)).abs() <= 1.0, "{} vs {}", mean(&img), mean(&out));
    }

    #[test]
    fn blend_over_opaque_and_transparent() {
        let mut img = RasterImage::filled(1, 1, [0, 0, 0, 255]);
        img.blend(0, 0, [255, 255, 255, 128]);
        let px = img.get(0, 0);
        assert_eq!(px[3], 255);
        assert!((px[0] as i32 - 128).abs() <= 1);

        let mut img = RasterImage::new(1, 1);
        img.blend(0, 0, [220, 30, 30, 200]);
        assert_eq!(img.get(0, 0), [220, 30, 30, 200]);
    }

    #[test]
    fn premultiplied_downscale_keeps_stroke_color() {
        // A red stripe on a transparent canvas must stay red (not darken)
        // after premultiplied downscaling.
        let mut img = RasterImage::new(64, 64);
        for y in 28..36 {
            for x in 0..64 {
                img.put(x, y, [220, 30, 30, 200]);
            }
        }
        let out = resize_premultiplied(&img, 32, 32);
        let px = out.get(16, 16);
        assert_eq!(px[0], 220);
        assert!(px[3] > 0);
    }
}
