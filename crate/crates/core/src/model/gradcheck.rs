//! Central-difference verification of the analytic gradients.

use alloc::vec::Vec;

use super::input::batch_of_one;
use super::layers::BnMode;
use super::tensor::Tensor;
use super::{cross_entropy, ModelError, ResidualClassifier};
use crate::gaze::GroupLabel;
use crate::raster::RasterImage;
use crate::rng::Pcg32;

/// Compare analytic loss gradients against central finite differences on
/// `n_samples` randomly chosen trainable parameters; returns the maximum
/// relative error `|a - n| / max(|a|, |n|, 1e-6)`.
///
/// The loss is the single-sample cross entropy with batch-statistics
/// normalization (running stats untouched), so repeated forward passes
/// see the same function the backward pass differentiated.
pub fn grad_check(
    model: &mut ResidualClassifier<f64>,
    img: &RasterImage,
    label: GroupLabel,
    epsilon: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64, ModelError> {
    if !(1e-6..=1e-3).contains(&epsilon) {
        return Err(ModelError::BadEpsilon);
    }
    let label_idx = model
        .class_order()
        .iter()
        .position(|c| c == &label)
        .ok_or(ModelError::UnknownLabel(label))?;
    let x = batch_of_one::<f64>(img, model.config());

    // Analytic pass.
    model.zero_grads();
    let logits = model.forward(&x, BnMode::Batch { update_running: false });
    let (_, dlogits) = cross_entropy(&logits, &[label_idx]);
    model.backward(&dlogits);

    // Index trainable parameters by cumulative element count.
    let sizes: Vec<(usize, usize)> = model
        .params()
        .enumerate()
        .filter(|(_, p)| p.role.trainable())
        .map(|(i, p)| (i, p.value.len()))
        .collect();
    let total: usize = sizes.iter().map(|(_, l)| l).sum();

    let mut rng = Pcg32::new(seed, 0x6C);
    let mut max_rel = 0.0f64;
    for _ in 0..n_samples {
        let mut flat = rng.next_below(total as u32) as usize;
        let (param_idx, offset) = {
            let mut found = (0usize, 0usize);
            for &(pi, len) in &sizes {
                if flat < len {
                    found = (pi, flat);
                    break;
                }
                flat -= len;
            }
            found
        };

        let analytic = nth_param(model, param_idx).grad.data()[offset];
        let orig = nth_param(model, param_idx).value.data()[offset];

        set_elem(model, param_idx, offset, orig + epsilon);
        let loss_plus = forward_loss(model, &x, label_idx);
        set_elem(model, param_idx, offset, orig - epsilon);
        let loss_minus = forward_loss(model, &x, label_idx);
        set_elem(model, param_idx, offset, orig);

        let numeric = (loss_plus - loss_minus) / (2.0 * epsilon);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        if rel > max_rel {
            max_rel = rel;
        }
    }
    Ok(max_rel)
}

fn nth_param<'m>(model: &'m ResidualClassifier<f64>, idx: usize) -> &'m super::tensor::Param<f64> {
    model.params().nth(idx).expect("parameter index in range")
}

fn set_elem(model: &mut ResidualClassifier<f64>, param_idx: usize, offset: usize, value: f64) {
    let param = model.store_mut().iter_mut().nth(param_idx).expect("parameter index in range");
    param.value.data_mut()[offset] = value;
}

fn forward_loss(model: &mut ResidualClassifier<f64>, x: &Tensor<f64>, label_idx: usize) -> f64 {
    let logits = model.forward(x, BnMode::Batch { update_running: false });
    let (loss, _) = cross_entropy(&logits, &[label_idx]);
    loss
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaze::GroupLabel::{Control, Depressive};
    use crate::model::{build_model, softmax_row, ModelConfig};

    #[test]
    fn head_bias_gradient_closed_form_at_zero() {
        // All-zero input and zero head: logits are exactly zero, so the
        // head-bias gradient is softmax(0) - onehot(label), exactly.
        let cfg = ModelConfig::tiny(3, 32);
        let classes = [crate::gaze::GroupLabel::Anxious, Control, Depressive];
        let mut model = build_model::<f64>(&cfg, &classes, 21).unwrap();
        let head_w_len = model.params().find(|p| p.name == "head.weight").unwrap().value.len();
        model.set_param("head.weight", &alloc::vec![0.0f64; head_w_len]).unwrap();
        let black = RasterImage::filled(32, 32, [0, 0, 0, 255]);
        let x = batch_of_one::<f64>(&black, model.config());
        model.zero_grads();
        let logits = model.forward(&x, BnMode::Batch { update_running: false });
        assert!(logits.data().iter().all(|&v| v == 0.0));
        let (_, dlogits) = cross_entropy(&logits, &[1]);
        model.backward(&dlogits);
        let grad = model.params().find(|p| p.name == "head.bias").unwrap().grad.data().to_vec();
        let uniform = softmax_row(&[0.0, 0.0, 0.0]);
        assert_eq!(grad[0], uniform[0]);
        assert_eq!(grad[1], uniform[1] - 1.0);
        assert_eq!(grad[2], uniform[2]);
    }

    #[test]
    fn epsilon_bounds_enforced() {
        let cfg = ModelConfig::tiny(2, 32);
        let mut model = build_model::<f64>(&cfg, &[Control, Depressive], 2).unwrap();
        let img = RasterImage::filled(32, 32, [50, 80, 120, 255]);
        assert_eq!(grad_check(&mut model, &img, Control, 1e-2, 10, 1), Err(ModelError::BadEpsilon));
    }

    #[test]
    fn small_sample_gradcheck_is_accurate() {
        let cfg = ModelConfig::tiny(2, 32);
        let mut model = build_model::<f64>(&cfg, &[Control, Depressive], 4).unwrap();
        let mut img = RasterImage::filled(32, 32, [30, 30, 30, 255]);
        let mut rng = Pcg32::new(8, 2);
        for _ in 0..100 {
            let x = rng.next_below(32);
            let y = rng.next_below(32);
            img.put(x, y, [200, 150, 90, 255]);
        }
        let err = grad_check(&mut model, &img, Depressive, 1e-4, 40, 3).unwrap();
        assert!(err < 1e-3, "max relative error {err}");
    }
}
