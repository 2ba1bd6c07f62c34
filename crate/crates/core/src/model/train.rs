//! SGD training with the two-phase transfer-learning contract.
//!
//! Phase 1 (only when a backbone was loaded): for `head_only_epochs`
//! epochs only head parameters update and batch-norm layers run on their
//! frozen running statistics, so every backbone tensor stays bit-identical
//! to its loaded value. Phase 2 unfreezes everything and batch norm
//! switches to batch statistics with running updates.
//!
//! The update rule is classical SGD with momentum and L2 weight decay:
//! `v <- mu * v + (g + wd * w)`, `w <- w - lr * v`.

use alloc::vec::Vec;


use super::input::image_to_tensor;
use super::layers::BnMode;
use super::tensor::{Scalar, Tensor};
use super::{cross_entropy, ModelError, ResidualClassifier};
use crate::gaze::GroupLabel;
use crate::raster::RasterImage;
use crate::rng::Pcg32;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum TrainTransforms {
    #[default]
    None,
    /// Random horizontal flip plus a uniform +/-4 px shift (zero fill).
    Light,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Phase-1 length; applies only when a backbone was loaded.
    pub head_only_epochs: usize,
    pub seed: u64,
    pub transforms: TrainTransforms,
}

impl TrainConfig {
    pub fn new(epochs: usize, batch_size: usize, learning_rate: f64, seed: u64) -> Self {
        TrainConfig {
            epochs,
            batch_size,
            learning_rate,
            momentum: 0.9,
            weight_decay: 1e-4,
            head_only_epochs: 3,
            seed,
            transforms: TrainTransforms::None,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.epochs < 1 {
            return Err(ModelError::InvalidTrainConfig("epochs must be >= 1"));
        }
        if self.batch_size < 1 {
            return Err(ModelError::InvalidTrainConfig("batch size must be >= 1"));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(ModelError::InvalidTrainConfig("learning rate must be finite and >= 0"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(ModelError::InvalidTrainConfig("momentum must be in [0, 1)"));
        }
        if self.weight_decay < 0.0 {
            return Err(ModelError::InvalidTrainConfig("weight decay must be >= 0"));
        }
        Ok(())
    }
}

/// Per-epoch mean training loss and accuracy.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub epoch_loss: Vec<f64>,
    pub epoch_accuracy: Vec<f64>,
}

impl History {
    pub fn final_accuracy(&self) -> f64 {
        self.epoch_accuracy.last().copied().unwrap_or(0.0)
    }

    pub fn best_accuracy(&self) -> f64 {
        self.epoch_accuracy.iter().cloned().fold(0.0, f64::max)
    }
}

/// Train in place; deterministic given the seed (single-worker data path,
/// fixed batch and update order).
pub fn train<T: Scalar>(
    model: &mut ResidualClassifier<T>,
    data: &[(RasterImage, GroupLabel)],
    cfg: &TrainConfig,
) -> Result<History, ModelError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(ModelError::EmptyTrainSet);
    }
    let size = model.config().input_size;
    let bg = model.config().composite_bg;
    let mut labels = Vec::with_capacity(data.len());
    for (_, group) in data {
        let idx = model
            .class_order()
            .iter()
            .position(|c| c == group)
            .ok_or(ModelError::UnknownLabel(*group))?;
        labels.push(idx);
    }
    let prepped: Vec<Tensor<T>> = data.iter().map(|(img, _)| image_to_tensor(img, size, bg)).collect();
    let s = size as usize;
    let plane = 3 * s * s;

    let mut velocities: Vec<Tensor<T>> = model.params().map(|p| Tensor::zeros(p.value.shape())).collect();
    let mut rng = Pcg32::new(cfg.seed, 0x7A17);
    let mut history = History::default();

    let mut indices: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..cfg.epochs {
        let head_only = model.backbone_loaded() && epoch < cfg.head_only_epochs;
        let mode = if head_only {
            BnMode::Running
        } else {
            BnMode::Batch { update_running: true }
        };
        rng.shuffle(&mut indices);

        let mut loss_sum = 0.0f64;
        let mut correct = 0usize;
        for batch in indices.chunks(cfg.batch_size) {
            let n = batch.len();
            let mut x = Tensor::zeros(&[n, 3, s, s]);
            let mut y = Vec::with_capacity(n);
            for (bi, &di) in batch.iter().enumerate() {
                let dst = &mut x.data_mut()[bi * plane..(bi + 1) * plane];
                dst.copy_from_slice(prepped[di].data());
                if cfg.transforms == TrainTransforms::Light {
                    let flip = rng.next_f64() < 0.5;
                    let dx = rng.next_below(9) as i64 - 4;
                    let dy = rng.next_below(9) as i64 - 4;
                    transform_chw(dst, s, flip, dx, dy);
                }
                y.push(labels[di]);
            }

            model.zero_grads();
            let logits = model.forward(&x, mode);
            let (loss, dlogits) = cross_entropy(&logits, &y);
            if !loss.is_finite() {
                return Err(ModelError::DivergedLoss { epoch });
            }
            loss_sum += loss * n as f64;
            for (bi, &label) in y.iter().enumerate() {
                let row = &logits.data()[bi * model.config().n_classes..(bi + 1) * model.config().n_classes];
                let pred = argmax_t(row);
                if pred == label {
                    correct += 1;
                }
            }
            model.backward(&dlogits);

            let lr = T::from_f64(cfg.learning_rate);
            let mu = T::from_f64(cfg.momentum);
            let wd = T::from_f64(cfg.weight_decay);
            for (param, vel) in model.store_mut().iter_mut().zip(&mut velocities) {
                if !param.role.trainable() {
                    continue;
                }
                if head_only && !param.is_head() {
                    continue;
                }
                for ((w, &g), v) in param
                    .value
                    .data_mut()
                    .iter_mut()
                    .zip(param.grad.data())
                    .zip(vel.data_mut())
                {
                    *v = mu * *v + (g + wd * *w);
                    *w = *w - lr * *v;
                }
            }
        }
        history.epoch_loss.push(loss_sum / data.len() as f64);
        history.epoch_accuracy.push(correct as f64 / data.len() as f64);
    }
    Ok(history)
}

fn argmax_t<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Horizontal flip and integer shift on one CHW image, zero fill.
fn transform_chw<T: Scalar>(data: &mut [T], s: usize, flip: bool, dx: i64, dy: i64) {
    if flip {
        for c in 0..3 {
            for y in 0..s {
                let row = &mut data[c * s * s + y * s..c * s * s + (y + 1) * s];
                row.reverse();
            }
        }
    }
    if dx != 0 || dy != 0 {
        let src: Vec<T> = data.to_vec();
        for c in 0..3 {
            for y in 0..s as i64 {
                for x in 0..s as i64 {
                    let sx = x - dx;
                    let sy = y - dy;
                    let v = if sx >= 0 && sx < s as i64 && sy >= 0 && sy < s as i64 {
                        src[c * s * s + sy as usize * s + sx as usize]
                    } else {
                        T::zero()
                    };
                    data[c * s * s + y as usize * s + x as usize] = v;
                }
            }
        }
    }
}
