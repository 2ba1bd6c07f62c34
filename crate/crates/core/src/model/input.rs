//! Image-to-tensor preparation for the classifier.

use alloc::vec::Vec;

use super::tensor::{Scalar, Tensor};
use super::ModelConfig;
use crate::raster::{resize, RasterImage};

/// Bilinear-resize to `size`, composite straight-alpha RGBA onto the
/// background, and scale channels to [0, 1] in CHW order.
pub fn image_to_tensor<T: Scalar>(img: &RasterImage, size: u32, background: [u8; 3]) -> Tensor<T> {
    let resized = if img.width() == size && img.height() == size {
        img.clone()
    } else {
        resize(img, size)
    };
    let s = size as usize;
    let mut data = Vec::with_capacity(3 * s * s);
    for c in 0..3usize {
        for px in resized.data().chunks_exact(4) {
            let a = px[3] as f64 / 255.0;
            let v = px[c] as f64 * a + background[c] as f64 * (1.0 - a);
            data.push(T::from_f64(v / 255.0));
        }
    }
    Tensor::from_vec(&[3, s, s], data)
}

/// A single-image batch shaped [1, 3, S, S].
pub(crate) fn batch_of_one<T: Scalar>(img: &RasterImage, cfg: &ModelConfig) -> Tensor<T> {
    let t = image_to_tensor::<T>(img, cfg.input_size, cfg.composite_bg);
    let s = cfg.input_size as usize;
    Tensor::from_vec(&[1, 3, s, s], t.data().to_vec())
}
