//! Residual convolutional classifiers with explicit backpropagation.
//!
//! The family follows the standard residual-network construction: a 7x7
//! stride-2 stem with batch norm and 3x3 stride-2 max pooling, four stages
//! of basic or bottleneck blocks, global average pooling, and a linear
//! head sized to the class count. Depths 18/34 use basic blocks, depths
//! 50/101/152 bottleneck blocks; the desk-scale depth 8 is a [1,1,1,1]
//! basic-block plan sharing the same block algebra. A rational width
//! multiplier scales every stage (the tiny configuration runs at 1/4).

mod gradcheck;
mod input;
mod layers;
mod tensor;
mod train;

pub use gradcheck::grad_check;
pub use input::image_to_tensor;
pub use tensor::{Param, ParamId, ParamRole, ParamStore, Scalar, Tensor};
pub use train::{train, History, TrainConfig, TrainTransforms};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;

use crate::gaze::GroupLabel;
use crate::raster::RasterImage;
use crate::rng::Pcg32;
use layers::{
    add_tensors, conv_backward, conv_forward, global_avg_pool, global_avg_pool_backward,
    relu_backward, relu_forward, BatchNorm2d, Conv2d, Linear, MaxPool,
};

pub use layers::BnMode;

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("unsupported depth {0} (expected one of 8, 18, 34, 50, 101, 152)")]
    UnsupportedDepth(u32),
    #[error("invalid model config: {0}")]
    InvalidConfig(&'static str),
    #[error("tensor {name} has mismatched shape")]
    ShapeMismatch { name: String },
    #[error("tensor {name} missing from weight set")]
    MissingTensor { name: String },
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("loss diverged (non-finite) in epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("label {0:?} is not in the model's class order")]
    UnknownLabel(GroupLabel),
    #[error("invalid training config: {0}")]
    InvalidTrainConfig(&'static str),
    #[error("gradient-check epsilon must be in [1e-6, 1e-3]")]
    BadEpsilon,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelConfig {
    pub depth: u32,
    pub n_classes: usize,
    pub input_size: u32,
    /// Rational width multiplier applied to every stage's channel count.
    pub width_num: u32,
    pub width_den: u32,
    /// Background RGB that transparent inputs composite onto.
    pub composite_bg: [u8; 3],
}

impl ModelConfig {
    /// Full-width model at the given depth and input size.
    pub fn new(depth: u32, n_classes: usize, input_size: u32) -> Self {
        ModelConfig { depth, n_classes, input_size, width_num: 1, width_den: 1, composite_bg: [0, 0, 0] }
    }

    /// The desk-scale configuration: depth 8, quarter width.
    pub fn tiny(n_classes: usize, input_size: u32) -> Self {
        ModelConfig { depth: 8, n_classes, input_size, width_num: 1, width_den: 4, composite_bg: [0, 0, 0] }
    }

    pub fn architecture_name(&self) -> String {
        format!("ResNet-{}", self.depth)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        stage_plan(self.depth)?;
        if self.n_classes < 2 {
            return Err(ModelError::InvalidConfig("need at least 2 classes"));
        }
        if self.input_size < 32 {
            return Err(ModelError::InvalidConfig("input size must be >= 32"));
        }
        if self.width_num == 0 || self.width_den == 0 {
            return Err(ModelError::InvalidConfig("width multiplier must be positive"));
        }
        for base in [64u32, 128, 256, 512] {
            let scaled = base * self.width_num;
            if scaled % self.width_den != 0 || scaled / self.width_den == 0 {
                return Err(ModelError::InvalidConfig(
                    "width multiplier must scale every stage to a positive integer",
                ));
            }
        }
        Ok(())
    }

    fn ch(&self, base: u32) -> usize {
        (base * self.width_num / self.width_den) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BlockKind {
    Basic,
    Bottleneck,
}

impl BlockKind {
    fn expansion(self) -> usize {
        match self {
            BlockKind::Basic => 1,
            BlockKind::Bottleneck => 4,
        }
    }
}

/// Blocks per stage and block kind for each supported depth.
fn stage_plan(depth: u32) -> Result<([usize; 4], BlockKind), ModelError> {
    Ok(match depth {
        8 => ([1, 1, 1, 1], BlockKind::Basic),
        18 => ([2, 2, 2, 2], BlockKind::Basic),
        34 => ([3, 4, 6, 3], BlockKind::Basic),
        50 => ([3, 4, 6, 3], BlockKind::Bottleneck),
        101 => ([3, 4, 23, 3], BlockKind::Bottleneck),
        152 => ([3, 8, 36, 3], BlockKind::Bottleneck),
        other => return Err(ModelError::UnsupportedDepth(other)),
    })
}

struct BasicBlock<T: Scalar> {
    conv1: Conv2d,
    bn1: BatchNorm2d,
    conv2: Conv2d,
    bn2: BatchNorm2d,
    down: Option<(Conv2d, BatchNorm2d)>,
    input: Option<Tensor<T>>,
    relu1_out: Option<Tensor<T>>,
    out: Option<Tensor<T>>,
}

impl<T: Scalar> BasicBlock<T> {
    fn new(store: &mut ParamStore<T>, name: &str, in_c: usize, planes: usize, stride: usize) -> Self {
        let conv1 = Conv2d::new(store, &format!("{name}.conv1"), in_c, planes, 3, stride, 1);
        let bn1 = BatchNorm2d::new(store, &format!("{name}.bn1"), planes);
        let conv2 = Conv2d::new(store, &format!("{name}.conv2"), planes, planes, 3, 1, 1);
        let bn2 = BatchNorm2d::new(store, &format!("{name}.bn2"), planes);
        let down = if stride != 1 || in_c != planes {
            let c = Conv2d::new(store, &format!("{name}.down.conv"), in_c, planes, 1, stride, 0);
            let bn = BatchNorm2d::new(store, &format!("{name}.down.bn"), planes);
            Some((c, bn))
        } else {
            None
        };
        BasicBlock { conv1, bn1, conv2, bn2, down, input: None, relu1_out: None, out: None }
    }

    fn forward(&mut self, store: &mut ParamStore<T>, x: &Tensor<T>, mode: BnMode) -> Tensor<T> {
        self.input = Some(x.clone());
        let a = conv_forward(&self.conv1, store, x);
        let a = self.bn1.forward(store, &a, mode);
        let h = relu_forward(&a);
        let b = conv_forward(&self.conv2, store, &h);
        let b = self.bn2.forward(store, &b, mode);
        let identity = match &mut self.down {
            Some((conv, bn)) => {
                let d = conv_forward(conv, store, x);
                bn.forward(store, &d, mode)
            }
            None => x.clone(),
        };
        let y = relu_forward(&add_tensors(&b, &identity));
        self.relu1_out = Some(h);
        self.out = Some(y.clone());
        y
    }

    fn backward(&mut self, store: &mut ParamStore<T>, dy: &Tensor<T>) -> Tensor<T> {
        let y = self.out.take().expect("forward before backward");
        let h = self.relu1_out.take().expect("forward before backward");
        let x = self.input.take().expect("forward before backward");
        let dsum = relu_backward(dy, &y);
        let db = self.bn2.backward(store, &dsum);
        let dh = conv_backward(&self.conv2, store, &h, &db);
        let da = relu_backward(&dh, &h);
        let da = self.bn1.backward(store, &da);
        let dx_main = conv_backward(&self.conv1, store, &x, &da);
        let dx_id = match &mut self.down {
            Some((conv, bn)) => {
                let d = bn.backward(store, &dsum);
                conv_backward(conv, store, &x, &d)
            }
            None => dsum,
        };
        add_tensors(&dx_main, &dx_id)
    }
}

struct BottleneckBlock<T: Scalar> {
    conv1: Conv2d,
    bn1: BatchNorm2d,
    conv2: Conv2d,
    bn2: BatchNorm2d,
    conv3: Conv2d,
    bn3: BatchNorm2d,
    down: Option<(Conv2d, BatchNorm2d)>,
    input: Option<Tensor<T>>,
    relu1_out: Option<Tensor<T>>,
    relu2_out: Option<Tensor<T>>,
    out: Option<Tensor<T>>,
}

impl<T: Scalar> BottleneckBlock<T> {
    fn new(store: &mut ParamStore<T>, name: &str, in_c: usize, planes: usize, stride: usize) -> Self {
        let out_c = planes * BlockKind::Bottleneck.expansion();
        let conv1 = Conv2d::new(store, &format!("{name}.conv1"), in_c, planes, 1, 1, 0);
        let bn1 = BatchNorm2d::new(store, &format!("{name}.bn1"), planes);
        let conv2 = Conv2d::new(store, &format!("{name}.conv2"), planes, planes, 3, stride, 1);
        let bn2 = BatchNorm2d::new(store, &format!("{name}.bn2"), planes);
        let conv3 = Conv2d::new(store, &format!("{name}.conv3"), planes, out_c, 1, 1, 0);
        let bn3 = BatchNorm2d::new(store, &format!("{name}.bn3"), out_c);
        let down = if stride != 1 || in_c != out_c {
            let c = Conv2d::new(store, &format!("{name}.down.conv"), in_c, out_c, 1, stride, 0);
            let bn = BatchNorm2d::new(store, &format!("{name}.down.bn"), out_c);
            Some((c, bn))
        } else {
            None
        };
        BottleneckBlock {
            conv1, bn1, conv2, bn2, conv3, bn3, down,
            input: None, relu1_out: None, relu2_out: None, out: None,
        }
    }

    fn forward(&mut self, store: &mut ParamStore<T>, x: &Tensor<T>, mode: BnMode) -> Tensor<T> {
        self.input = Some(x.clone());
        let a = conv_forward(&self.conv1, store, x);
        let a = self.bn1.forward(store, &a, mode);
        let h1 = relu_forward(&a);
        let b = conv_forward(&self.conv2, store, &h1);
        let b = self.bn2.forward(store, &b, mode);
        let h2 = relu_forward(&b);
        let c = conv_forward(&self.conv3, store, &h2);
        let c = self.bn3.forward(store, &c, mode);
        let identity = match &mut self.down {
            Some((conv, bn)) => {
                let d = conv_forward(conv, store, x);
                bn.forward(store, &d, mode)
            }
            None => x.clone(),
        };
        let y = relu_forward(&add_tensors(&c, &identity));
        self.relu1_out = Some(h1);
        self.relu2_out = Some(h2);
        self.out = Some(y.clone());
        y
    }

    fn backward(&mut self, store: &mut ParamStore<T>, dy: &Tensor<T>) -> Tensor<T> {
        let y = self.out.take().expect("forward before backward");
        let h2 = self.relu2_out.take().expect("forward before backward");
        let h1 = self.relu1_out.take().expect("forward before backward");
        let x = self.input.take().expect("forward before backward");
        let dsum = relu_backward(dy, &y);
        let dc = self.bn3.backward(store, &dsum);
        let dh2 = conv_backward(&self.conv3, store, &h2, &dc);
        let db = relu_backward(&dh2, &h2);
        let db = self.bn2.backward(store, &db);
        let dh1 = conv_backward(&self.conv2, store, &h1, &db);
        let da = relu_backward(&dh1, &h1);
        let da = self.bn1.backward(store, &da);
        let dx_main = conv_backward(&self.conv1, store, &x, &da);
        let dx_id = match &mut self.down {
            Some((conv, bn)) => {
                let d = bn.backward(store, &dsum);
                conv_backward(conv, store, &x, &d)
            }
            None => dsum,
        };
        add_tensors(&dx_main, &dx_id)
    }
}

enum Block<T: Scalar> {
    Basic(BasicBlock<T>),
    Bottleneck(BottleneckBlock<T>),
}

impl<T: Scalar> Block<T> {
    fn forward(&mut self, store: &mut ParamStore<T>, x: &Tensor<T>, mode: BnMode) -> Tensor<T> {
        match self {
            Block::Basic(b) => b.forward(store, x, mode),
            Block::Bottleneck(b) => b.forward(store, x, mode),
        }
    }

    fn backward(&mut self, store: &mut ParamStore<T>, dy: &Tensor<T>) -> Tensor<T> {
        match self {
            Block::Basic(b) => b.backward(store, dy),
            Block::Bottleneck(b) => b.backward(store, dy),
        }
    }
}

/// A residual CNN plus its class order and parameter store.
pub struct ResidualClassifier<T: Scalar> {
    config: ModelConfig,
    class_order: Vec<GroupLabel>,
    store: ParamStore<T>,
    stem_conv: Conv2d,
    stem_bn: BatchNorm2d,
    stem_pool: MaxPool,
    stages: Vec<Vec<Block<T>>>,
    head: Linear,
    backbone_loaded: bool,
    // Forward caches.
    input: Option<Tensor<T>>,
    stem_act: Option<Tensor<T>>,
    feat_shape: Vec<usize>,
    pooled: Option<Tensor<T>>,
}

/// Build a model with seeded initialization: convolution weights are
/// Kaiming-uniform (`U(-sqrt(6/fan_in), sqrt(6/fan_in))`), batch-norm
/// scale 1 / shift 0 with running stats (0, 1), and the head uniform in
/// `+/- 1/sqrt(fan_in)` with zero bias.
pub fn build_model<T: Scalar>(
    cfg: &ModelConfig,
    classes: &[GroupLabel],
    seed: u64,
) -> Result<ResidualClassifier<T>, ModelError> {
    cfg.validate()?;
    if classes.len() != cfg.n_classes {
        return Err(ModelError::InvalidConfig("class list length must equal n_classes"));
    }
    for (i, c) in classes.iter().enumerate() {
        if classes[..i].contains(c) {
            return Err(ModelError::InvalidConfig("duplicate class in class order"));
        }
    }
    let (plan, kind) = stage_plan(cfg.depth)?;
    let mut store = ParamStore::new();
    let c0 = cfg.ch(64);
    let stem_conv = Conv2d::new(&mut store, "stem.conv", 3, c0, 7, 2, 3);
    let stem_bn = BatchNorm2d::new(&mut store, "stem.bn", c0);

    let mut stages = Vec::with_capacity(4);
    let mut in_c = c0;
    for (si, (&n_blocks, base)) in plan.iter().zip([64u32, 128, 256, 512]).enumerate() {
        let planes = cfg.ch(base);
        let mut blocks = Vec::with_capacity(n_blocks);
        for bi in 0..n_blocks {
            let stride = if si > 0 && bi == 0 { 2 } else { 1 };
            let name = format!("stage{}.block{}", si + 1, bi);
            let block = match kind {
                BlockKind::Basic => Block::Basic(BasicBlock::new(&mut store, &name, in_c, planes, stride)),
                BlockKind::Bottleneck => {
                    Block::Bottleneck(BottleneckBlock::new(&mut store, &name, in_c, planes, stride))
                }
            };
            blocks.push(block);
            in_c = planes * kind.expansion();
        }
        stages.push(blocks);
    }
    let head = Linear::new(&mut store, "head", in_c, cfg.n_classes);

    // Seeded init in store order.
    let mut rng = Pcg32::new(seed, 0x1417);
    for param in store.iter_mut() {
        match param.role {
            ParamRole::ConvWeight => {
                let shape = param.value.shape();
                let fan_in = (shape[1] * shape[2] * shape[3]) as f64;
                let bound = (6.0 / fan_in).sqrt();
                for v in param.value.data_mut() {
                    *v = T::from_f64(rng.next_f64() * 2.0 * bound - bound);
                }
            }
            ParamRole::LinearWeight => {
                let fan_in = param.value.shape()[1] as f64;
                let bound = 1.0 / fan_in.sqrt();
                for v in param.value.data_mut() {
                    *v = T::from_f64(rng.next_f64() * 2.0 * bound - bound);
                }
            }
            _ => {}
        }
    }

    Ok(ResidualClassifier {
        config: *cfg,
        class_order: classes.to_vec(),
        store,
        stem_conv,
        stem_bn,
        stem_pool: MaxPool::new(),
        stages,
        head,
        backbone_loaded: false,
        input: None,
        stem_act: None,
        feat_shape: Vec::new(),
        pooled: None,
    })
}

impl<T: Scalar> ResidualClassifier<T> {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn class_order(&self) -> &[GroupLabel] {
        &self.class_order
    }

    pub fn backbone_loaded(&self) -> bool {
        self.backbone_loaded
    }

    /// Blocks per stage (diagnostic view of the depth plan).
    pub fn stage_sizes(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.len()).collect()
    }

    pub fn params(&self) -> impl Iterator<Item = &Param<T>> {
        self.store.iter()
    }

    pub fn param_count(&self) -> usize {
        self.store.iter().map(|p| p.value.len()).sum()
    }

    pub(crate) fn store_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.store
    }

    /// Overwrite one named parameter (shape-checked by element count).
    pub fn set_param(&mut self, name: &str, data: &[T]) -> Result<(), ModelError> {
        let param = self
            .store
            .by_name_mut(name)
            .ok_or_else(|| ModelError::MissingTensor { name: String::from(name) })?;
        if param.value.len() != data.len() {
            return Err(ModelError::ShapeMismatch { name: String::from(name) });
        }
        param.value.data_mut().copy_from_slice(data);
        Ok(())
    }

    /// Load a backbone: every non-head tensor must be present with the
    /// exact shape; head tensors in `weights` are ignored, the head keeps
    /// its random initialization, and the model records the frozen flag
    /// that drives phase-1 training.
    pub fn apply_backbone(
        &mut self,
        weights: &BTreeMap<String, (Vec<usize>, Vec<T>)>,
    ) -> Result<(), ModelError> {
        // Validate first so a mismatch can't leave the model half-loaded.
        for param in self.store.iter() {
            if param.is_head() {
                continue;
            }
            match weights.get(&param.name) {
                None => return Err(ModelError::MissingTensor { name: param.name.clone() }),
                Some((shape, data)) => {
                    if shape.as_slice() != param.value.shape() || data.len() != param.value.len() {
                        return Err(ModelError::ShapeMismatch { name: param.name.clone() });
                    }
                }
            }
        }
        for param in self.store.iter_mut() {
            if param.is_head() {
                continue;
            }
            let (_, data) = &weights[&param.name];
            param.value.data_mut().copy_from_slice(data);
        }
        self.backbone_loaded = true;
        Ok(())
    }

    /// Forward pass over a [N, 3, S, S] batch; returns logits [N, C].
    pub fn forward(&mut self, x: &Tensor<T>, mode: BnMode) -> Tensor<T> {
        self.input = Some(x.clone());
        let s = conv_forward(&self.stem_conv, &self.store, x);
        let s = self.stem_bn.forward(&mut self.store, &s, mode);
        let s = relu_forward(&s);
        let mut h = self.stem_pool.forward(&s);
        self.stem_act = Some(s);
        for stage in &mut self.stages {
            for block in stage {
                h = block.forward(&mut self.store, &h, mode);
            }
        }
        self.feat_shape = h.shape().to_vec();
        let pooled = global_avg_pool(&h);
        let logits = self.head.forward(&self.store, &pooled);
        self.pooled = Some(pooled);
        logits
    }

    /// Backpropagate from logit gradients; parameter gradients accumulate
    /// into the store.
    pub fn backward(&mut self, dlogits: &Tensor<T>) {
        let dpooled = self.head.backward(&mut self.store, dlogits);
        let mut dh = global_avg_pool_backward(&dpooled, &self.feat_shape);
        for stage in self.stages.iter_mut().rev() {
            for block in stage.iter_mut().rev() {
                dh = block.backward(&mut self.store, &dh);
            }
        }
        let ds = self.stem_pool.backward(&dh);
        let stem_act = self.stem_act.take().expect("forward before backward");
        let ds = relu_backward(&ds, &stem_act);
        let ds = self.stem_bn.backward(&mut self.store, &ds);
        let x = self.input.take().expect("forward before backward");
        let _ = conv_backward(&self.stem_conv, &mut self.store, &x, &ds);
    }

    pub fn zero_grads(&mut self) {
        self.store.zero_grads();
    }

    /// Class probabilities for one image (softmax of the logits).
    pub fn predict(&mut self, img: &RasterImage) -> Vec<f64> {
        let x = input::batch_of_one(img, &self.config);
        let logits = self.forward(&x, BnMode::Running);
        softmax_row(&logits.data().iter().map(|v| v.as_f64()).collect::<Vec<f64>>())
    }

    /// Penultimate (pooled) feature vector for one image.
    pub fn features(&mut self, img: &RasterImage) -> Vec<f64> {
        let x = input::batch_of_one(img, &self.config);
        let _ = self.forward(&x, BnMode::Running);
        self.pooled
            .as_ref()
            .expect("forward populates pooled features")
            .data()
            .iter()
            .map(|v| v.as_f64())
            .collect()
    }

    /// Predicted group for one image (argmax, ties to the lower index).
    pub fn classify(&mut self, img: &RasterImage) -> GroupLabel {
        let probs = self.predict(img);
        self.class_order[crate::eval::argmax(&probs)]
    }
}

/// Numerically stable softmax of one logit row.
pub fn softmax_row(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Mean cross-entropy over the batch and its gradient w.r.t. the logits.
pub fn cross_entropy<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> (f64, Tensor<T>) {
    let n = logits.shape()[0];
    let c = logits.shape()[1];
    debug_assert_eq!(labels.len(), n);
    let mut dlogits = Tensor::zeros(logits.shape());
    let mut loss = 0.0f64;
    for s in 0..n {
        let row: Vec<f64> = logits.data()[s * c..(s + 1) * c].iter().map(|v| v.as_f64()).collect();
        let probs = softmax_row(&row);
        loss -= probs[labels[s]].max(f64::MIN_POSITIVE).ln();
        for k in 0..c {
            let delta = if k == labels[s] { 1.0 } else { 0.0 };
            dlogits.data_mut()[s * c + k] = T::from_f64((probs[k] - delta) / n as f64);
        }
    }
    (loss / n as f64, dlogits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaze::GroupLabel::{Anxious, Control, Depressive};

    #[test]
    fn stage_plans_match_depth_table() {
        assert_eq!(stage_plan(18).unwrap(), ([2, 2, 2, 2], BlockKind::Basic));
        assert_eq!(stage_plan(34).unwrap(), ([3, 4, 6, 3], BlockKind::Basic));
        assert_eq!(stage_plan(50).unwrap(), ([3, 4, 6, 3], BlockKind::Bottleneck));
        assert_eq!(stage_plan(101).unwrap(), ([3, 4, 23, 3], BlockKind::Bottleneck));
        assert_eq!(stage_plan(152).unwrap(), ([3, 8, 36, 3], BlockKind::Bottleneck));
        assert_eq!(stage_plan(8).unwrap(), ([1, 1, 1, 1], BlockKind::Basic));
        assert_eq!(stage_plan(20), Err(ModelError::UnsupportedDepth(20)));
    }

    #[test]
    fn depth18_builds_with_basic_plan() {
        let cfg = ModelConfig::new(18, 3, 64);
        let model: ResidualClassifier<f32> = build_model(&cfg, &[Anxious, Control, Depressive], 1).unwrap();
        assert_eq!(model.stage_sizes(), [2, 2, 2, 2]);
        // 18-layer parameter count at full width (ImageNet-style head for
        // 3 classes): on the order of 11M parameters.
        let count = model.param_count();
        assert!(count > 11_000_000 && count < 12_000_000, "param count {count}");
    }

    #[test]
    fn depth50_uses_bottlenecks() {
        let cfg = ModelConfig { width_num: 1, width_den: 8, ..ModelConfig::new(50, 2, 64) };
        let model: ResidualClassifier<f32> = build_model(&cfg, &[Control, Depressive], 1).unwrap();
        assert_eq!(model.stage_sizes(), [3, 4, 6, 3]);
        // Bottleneck expansion shows up in the head width: 512/8 * 4.
        let head = model.params().find(|p| p.name == "head.weight").unwrap();
        assert_eq!(head.value.shape(), &[2, 256]);
    }

    #[test]
    fn tiny_forward_shape_contract() {
        let cfg = ModelConfig::tiny(3, 64);
        let mut model: ResidualClassifier<f32> = build_model(&cfg, &[Anxious, Control, Depressive], 7).unwrap();
        let img = RasterImage::filled(64, 64, [120, 40, 60, 255]);
        let probs = model.predict(&img);
        assert_eq!(probs.len(), 3);
        let sum: f64 = probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
        assert!(probs.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn zero_head_gives_uniform_probabilities() {
        let cfg = ModelConfig::tiny(3, 64);
        let mut model: ResidualClassifier<f32> = build_model(&cfg, &[Anxious, Control, Depressive], 7).unwrap();
        let head_w_len = model.params().find(|p| p.name == "head.weight").unwrap().value.len();
        model.set_param("head.weight", &alloc::vec![0.0f32; head_w_len]).unwrap();
        let img = RasterImage::filled(64, 64, [10, 200, 30, 255]);
        let probs = model.predict(&img);
        for p in probs {
            assert_eq!(p, 1.0 / 3.0);
        }
    }

    #[test]
    fn build_is_deterministic_per_seed() {
        let cfg = ModelConfig::tiny(2, 64);
        let a: ResidualClassifier<f32> = build_model(&cfg, &[Control, Depressive], 5).unwrap();
        let b: ResidualClassifier<f32> = build_model(&cfg, &[Control, Depressive], 5).unwrap();
        let c: ResidualClassifier<f32> = build_model(&cfg, &[Control, Depressive], 6).unwrap();
        for (pa, pb) in a.params().zip(b.params()) {
            assert_eq!(pa.value.data(), pb.value.data(), "{}", pa.name);
        }
        let differs = a.params().zip(c.params()).any(|(pa, pc)| pa.value.data() != pc.value.data());
        assert!(differs);
    }

    #[test]
    fn softmax_and_cross_entropy_basics() {
        let probs = softmax_row(&[0.0, 0.0, 0.0]);
        assert_eq!(probs, alloc::vec![1.0 / 3.0; 3]);
        let logits = Tensor::from_vec(&[1, 2], alloc::vec![0.0f64, 0.0]);
        let (loss, dlogits) = cross_entropy(&logits, &[1]);
        assert!((loss - core::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(dlogits.data(), &[0.5, -0.5]);
    }

    #[test]
    fn zeroed_basic_block_reduces_to_relu_of_input() {
        // Zero both convolutions of a stride-1 block: conv outputs are
        // exactly zero, batch norm of zero is zero on either statistics
        // path, so the block output is relu(0 + x) = relu(x), bit-exact.
        let mut store: ParamStore<f64> = ParamStore::new();
        let mut block = BasicBlock::new(&mut store, "blk", 4, 4, 1);
        assert!(block.down.is_none(), "stride-1 equal-width block has no downsample");
        let mut rng = Pcg32::new(3, 0);
        let x = Tensor::from_vec(
            &[2, 4, 3, 3],
            (0..2 * 4 * 9).map(|_| rng.next_f64() * 4.0 - 2.0).collect(),
        );
        for mode in [BnMode::Running, BnMode::Batch { update_running: false }] {
            let y = block.forward(&mut store, &x, mode);
            let expected = relu_forward(&x);
            assert_eq!(y.data(), expected.data(), "mode {mode:?}");
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(ModelConfig::new(18, 1, 64).validate().is_err());
        assert!(ModelConfig::new(18, 2, 16).validate().is_err());
        assert!(ModelConfig { width_num: 1, width_den: 7, ..ModelConfig::new(18, 2, 64) }
            .validate()
            .is_err());
        assert!(ModelConfig::tiny(2, 64).validate().is_ok());
    }
}
