//! Network layers with explicit forward/backward passes.
//!
//! Layers hold [`ParamId`] handles into the model's [`ParamStore`] plus
//! whatever activations the backward pass needs. Convolutions run as
//! im2col + GEMM per sample; backward recomputes the column buffer from
//! the cached input instead of caching it.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::tensor::{ParamId, ParamRole, ParamStore, Scalar, Tensor};

/// How batch-norm layers treat statistics for one forward pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BnMode {
    /// Normalize with batch statistics; optionally fold them into the
    /// running estimates (training).
    Batch { update_running: bool },
    /// Normalize with the stored running statistics (inference and
    /// frozen-backbone phases).
    Running,
}

pub(crate) struct Conv2d {
    pub weight: ParamId,
    in_c: usize,
    out_c: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
}

impl Conv2d {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        in_c: usize,
        out_c: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    ) -> Self {
        let weight = store.add(
            alloc::format!("{name}.weight"),
            ParamRole::ConvWeight,
            Tensor::zeros(&[out_c, in_c, kernel, kernel]),
        );
        Conv2d { weight, in_c, out_c, kernel, stride, pad }
    }

    pub fn out_hw(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h + 2 * self.pad - self.kernel) / self.stride + 1,
            (w + 2 * self.pad - self.kernel) / self.stride + 1,
        )
    }
}

/// Stateless conv pass; activation caches live in the block structs, so
/// the conv keeps only its geometry. Returns output [N, OC, OH, OW].
pub(crate) fn conv_forward<T: Scalar>(
    conv: &Conv2d,
    store: &ParamStore<T>,
    x: &Tensor<T>,
) -> Tensor<T> {
    let (n, c, h, w) = shape4(x);
    debug_assert_eq!(c, conv.in_c);
    let (oh, ow) = conv.out_hw(h, w);
    let k = conv.in_c * conv.kernel * conv.kernel;
    let l = oh * ow;
    let weight = store.value(conv.weight);
    let mut out = Tensor::zeros(&[n, conv.out_c, oh, ow]);
    let mut cols = vec![T::zero(); k * l];
    for s in 0..n {
        im2col(conv, x, s, &mut cols, oh, ow);
        let dst = &mut out.data_mut()[s * conv.out_c * l..(s + 1) * conv.out_c * l];
        T::gemm(
            conv.out_c, k, l, T::one(),
            weight.data(), k as isize, 1,
            &cols, l as isize, 1,
            T::zero(), dst,
        );
    }
    out
}

/// Gradients for weights (accumulated) and input.
pub(crate) fn conv_backward<T: Scalar>(
    conv: &Conv2d,
    store: &mut ParamStore<T>,
    x: &Tensor<T>,
    dy: &Tensor<T>,
) -> Tensor<T> {
    let (n, _, h, w) = shape4(x);
    let (oh, ow) = conv.out_hw(h, w);
    let k = conv.in_c * conv.kernel * conv.kernel;
    let l = oh * ow;
    let mut dx = Tensor::zeros(x.shape());
    let mut cols = vec![T::zero(); k * l];
    let mut dcols = vec![T::zero(); k * l];
    for s in 0..n {
        im2col(conv, x, s, &mut cols, oh, ow);
        let dy_s = &dy.data()[s * conv.out_c * l..(s + 1) * conv.out_c * l];
        {
            // dW[OC,K] += dY[OC,L] * cols^T[L,K]
            let (w_val, w_grad) = store.value_and_grad_mut(conv.weight);
            let _ = w_val;
            T::gemm(
                conv.out_c, l, k, T::one(),
                dy_s, l as isize, 1,
                &cols, 1, l as isize,
                T::one(), w_grad.data_mut(),
            );
        }
        {
            // dcols[K,L] = W^T[K,OC] * dY[OC,L]
            let weight = store.value(conv.weight);
            T::gemm(
                k, conv.out_c, l, T::one(),
                weight.data(), 1, k as isize,
                dy_s, l as isize, 1,
                T::zero(), &mut dcols,
            );
        }
        col2im(conv, &dcols, &mut dx, s, oh, ow);
    }
    dx
}

fn im2col<T: Scalar>(conv: &Conv2d, x: &Tensor<T>, sample: usize, cols: &mut [T], oh: usize, ow: usize) {
    let (_, c, h, w) = shape4(x);
    let l = oh * ow;
    let data = x.data();
    let base = sample * c * h * w;
    let mut row = 0usize;
    for ci in 0..c {
        for ky in 0..conv.kernel {
            for kx in 0..conv.kernel {
                let dst = &mut cols[row * l..(row + 1) * l];
                let mut idx = 0usize;
                for oy in 0..oh {
                    let sy = (oy * conv.stride + ky) as isize - conv.pad as isize;
                    if sy < 0 || sy >= h as isize {
                        for d in dst[idx..idx + ow].iter_mut() {
                            *d = T::zero();
                        }
                        idx += ow;
                        continue;
                    }
                    let src_row = base + ci * h * w + sy as usize * w;
                    for ox in 0..ow {
                        let sx = (ox * conv.stride + kx) as isize - conv.pad as isize;
                        dst[idx] = if sx < 0 || sx >= w as isize {
                            T::zero()
                        } else {
                            data[src_row + sx as usize]
                        };
                        idx += 1;
                    }
                }
                row += 1;
            }
        }
    }
}

fn col2im<T: Scalar>(conv: &Conv2d, dcols: &[T], dx: &mut Tensor<T>, sample: usize, oh: usize, ow: usize) {
    let shape = dx.shape().to_vec();
    let (c, h, w) = (shape[1], shape[2], shape[3]);
    let l = oh * ow;
    let data = dx.data_mut();
    let base = sample * c * h * w;
    let mut row = 0usize;
    for ci in 0..c {
        for ky in 0..conv.kernel {
            for kx in 0..conv.kernel {
                let src = &dcols[row * l..(row + 1) * l];
                let mut idx = 0usize;
                for oy in 0..oh {
                    let sy = (oy * conv.stride + ky) as isize - conv.pad as isize;
                    if sy < 0 || sy >= h as isize {
                        idx += ow;
                        continue;
                    }
                    let dst_row = base + ci * h * w + sy as usize * w;
                    for ox in 0..ow {
                        let sx = (ox * conv.stride + kx) as isize - conv.pad as isize;
                        if sx >= 0 && sx < w as isize {
                            data[dst_row + sx as usize] = data[dst_row + sx as usize] + src[idx];
                        }
                        idx += 1;
                    }
                }
                row += 1;
            }
        }
    }
}

pub(crate) struct BatchNorm2d {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub running_mean: ParamId,
    pub running_var: ParamId,
    channels: usize,
    eps: f64,
    momentum: f64,
    // Backward caches.
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    batch_mode: bool,
}

impl BatchNorm2d {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, channels: usize) -> Self {
        let mut gamma_t = Tensor::zeros(&[channels]);
        gamma_t.fill(T::one());
        let gamma = store.add(alloc::format!("{name}.gamma"), ParamRole::BnGamma, gamma_t);
        let beta = store.add(alloc::format!("{name}.beta"), ParamRole::BnBeta, Tensor::zeros(&[channels]));
        let running_mean = store.add(
            alloc::format!("{name}.running_mean"),
            ParamRole::BnRunningMean,
            Tensor::zeros(&[channels]),
        );
        let mut var_t = Tensor::zeros(&[channels]);
        var_t.fill(T::one());
        let running_var = store.add(alloc::format!("{name}.running_var"), ParamRole::BnRunningVar, var_t);
        BatchNorm2d {
            gamma,
            beta,
            running_mean,
            running_var,
            channels,
            eps: 1e-5,
            momentum: 0.1,
            xhat: Vec::new(),
            inv_std: Vec::new(),
            batch_mode: false,
        }
    }

    /// Normalize per channel. Batch statistics are the biased (1/m)
    /// moments; running estimates fold in with factor `momentum`.
    pub fn forward<T: Scalar>(&mut self, store: &mut ParamStore<T>, x: &Tensor<T>, mode: BnMode) -> Tensor<T> {
        let (n, c, h, w) = shape4(x);
        debug_assert_eq!(c, self.channels);
        let m = n * h * w;
        let plane = h * w;

        let (mean, var): (Vec<f64>, Vec<f64>) = match mode {
            BnMode::Batch { .. } => {
                let mut mean = vec![0.0f64; c];
                let mut var = vec![0.0f64; c];
                for ci in 0..c {
                    let mut sum = 0.0;
                    for s in 0..n {
                        let off = (s * c + ci) * plane;
                        for v in &x.data()[off..off + plane] {
                            sum += v.as_f64();
                        }
                    }
                    let mu = sum / m as f64;
                    let mut ss = 0.0;
                    for s in 0..n {
                        let off = (s * c + ci) * plane;
                        for v in &x.data()[off..off + plane] {
                            let d = v.as_f64() - mu;
                            ss += d * d;
                        }
                    }
                    mean[ci] = mu;
                    var[ci] = ss / m as f64;
                }
                (mean, var)
            }
            BnMode::Running => {
                let mean = store.value(self.running_mean).data().iter().map(|v| v.as_f64()).collect();
                let var = store.value(self.running_var).data().iter().map(|v| v.as_f64()).collect();
                (mean, var)
            }
        };

        if let BnMode::Batch { update_running: true } = mode {
            let mom = self.momentum;
            {
                let rm = store.value_mut(self.running_mean);
                for (r, &mu) in rm.data_mut().iter_mut().zip(&mean) {
                    *r = T::from_f64((1.0 - mom) * r.as_f64() + mom * mu);
                }
            }
            let rv = store.value_mut(self.running_var);
            for (r, &v) in rv.data_mut().iter_mut().zip(&var) {
                *r = T::from_f64((1.0 - mom) * r.as_f64() + mom * v);
            }
        }

        self.batch_mode = matches!(mode, BnMode::Batch { .. });
        self.inv_std = var.iter().map(|&v| 1.0 / (v + self.eps).sqrt()).collect();
        self.xhat = vec![0.0f64; x.len()];
        let gamma: Vec<f64> = store.value(self.gamma).data().iter().map(|v| v.as_f64()).collect();
        let beta: Vec<f64> = store.value(self.beta).data().iter().map(|v| v.as_f64()).collect();
        let mut out = Tensor::zeros(x.shape());
        for s in 0..n {
            for ci in 0..c {
                let off = (s * c + ci) * plane;
                let istd = self.inv_std[ci];
                for i in off..off + plane {
                    let xh = (x.data()[i].as_f64() - mean[ci]) * istd;
                    self.xhat[i] = xh;
                    out.data_mut()[i] = T::from_f64(gamma[ci] * xh + beta[ci]);
                }
            }
        }
        out
    }

    pub fn backward<T: Scalar>(&mut self, store: &mut ParamStore<T>, dy: &Tensor<T>) -> Tensor<T> {
        let (n, c, h, w) = shape4(dy);
        let plane = h * w;
        let m = (n * plane) as f64;
        let gamma: Vec<f64> = store.value(self.gamma).data().iter().map(|v| v.as_f64()).collect();

        let mut dgamma = vec![0.0f64; c];
        let mut dbeta = vec![0.0f64; c];
        let mut sum_dxhat = vec![0.0f64; c];
        let mut sum_dxhat_xhat = vec![0.0f64; c];
        for s in 0..n {
            for ci in 0..c {
                let off = (s * c + ci) * plane;
                for i in off..off + plane {
                    let g = dy.data()[i].as_f64();
                    dgamma[ci] += g * self.xhat[i];
                    dbeta[ci] += g;
                    let dxh = g * gamma[ci];
                    sum_dxhat[ci] += dxh;
                    sum_dxhat_xhat[ci] += dxh * self.xhat[i];
                }
            }
        }
        {
            let gg = store.grad_mut(self.gamma);
            for (g, &d) in gg.data_mut().iter_mut().zip(&dgamma) {
                *g = *g + T::from_f64(d);
            }
        }
        {
            let gb = store.grad_mut(self.beta);
            for (g, &d) in gb.data_mut().iter_mut().zip(&dbeta) {
                *g = *g + T::from_f64(d);
            }
        }

        let mut dx = Tensor::zeros(dy.shape());
        for s in 0..n {
            for ci in 0..c {
                let off = (s * c + ci) * plane;
                let istd = self.inv_std[ci];
                for i in off..off + plane {
                    let dxhat = dy.data()[i].as_f64() * gamma[ci];
                    let v = if self.batch_mode {
                        istd * (dxhat - sum_dxhat[ci] / m - self.xhat[i] * sum_dxhat_xhat[ci] / m)
                    } else {
                        // Running statistics are constants.
                        dxhat * istd
                    };
                    dx.data_mut()[i] = T::from_f64(v);
                }
            }
        }
        dx
    }
}

pub(crate) struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    in_features: usize,
    out_features: usize,
    /// Kept as f64 so the struct stays scalar-agnostic; lossless for both
    /// element types.
    cached_input: Option<Tensor<f64>>,
}

impl Linear {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, in_features: usize, out_features: usize) -> Self {
        let weight = store.add(
            alloc::format!("{name}.weight"),
            ParamRole::LinearWeight,
            Tensor::zeros(&[out_features, in_features]),
        );
        let bias = store.add(
            alloc::format!("{name}.bias"),
            ParamRole::LinearBias,
            Tensor::zeros(&[out_features]),
        );
        Linear { weight, bias, in_features, out_features, cached_input: None }
    }

    /// y[N,out] = x[N,in] W^T + b
    pub fn forward<T: Scalar>(&mut self, store: &ParamStore<T>, x: &Tensor<T>) -> Tensor<T> {
        let n = x.shape()[0];
        debug_assert_eq!(x.shape()[1], self.in_features);
        let weight = store.value(self.weight);
        let bias = store.value(self.bias);
        let mut out = Tensor::zeros(&[n, self.out_features]);
        T::gemm(
            n, self.in_features, self.out_features, T::one(),
            x.data(), self.in_features as isize, 1,
            weight.data(), 1, self.in_features as isize,
            T::zero(), out.data_mut(),
        );
        for s in 0..n {
            for (o, b) in out.data_mut()[s * self.out_features..(s + 1) * self.out_features]
                .iter_mut()
                .zip(bias.data())
            {
                *o = *o + *b;
            }
        }
        self.cached_input = Some(Tensor::from_vec(
            x.shape(),
            x.data().iter().map(|v| v.as_f64()).collect(),
        ));
        out
    }

    pub fn backward<T: Scalar>(&mut self, store: &mut ParamStore<T>, dy: &Tensor<T>) -> Tensor<T> {
        let x64 = self.cached_input.as_ref().expect("forward before backward");
        let n = dy.shape()[0];
        let x: Vec<T> = x64.data().iter().map(|&v| T::from_f64(v)).collect();
        {
            // dW[out,in] += dY^T[out,N] * X[N,in]
            let (_, w_grad) = store.value_and_grad_mut(self.weight);
            T::gemm(
                self.out_features, n, self.in_features, T::one(),
                dy.data(), 1, self.out_features as isize,
                &x, self.in_features as isize, 1,
                T::one(), w_grad.data_mut(),
            );
        }
        {
            let gb = store.grad_mut(self.bias);
            for s in 0..n {
                for (g, d) in gb.data_mut().iter_mut().zip(&dy.data()[s * self.out_features..]) {
                    *g = *g + *d;
                }
            }
        }
        // dX[N,in] = dY[N,out] * W[out,in]
        let weight = store.value(self.weight);
        let mut dx = Tensor::zeros(&[n, self.in_features]);
        T::gemm(
            n, self.out_features, self.in_features, T::one(),
            dy.data(), self.out_features as isize, 1,
            weight.data(), self.in_features as isize, 1,
            T::zero(), dx.data_mut(),
        );
        dx
    }
}

/// ReLU that returns the activation; backward masks on the cached output.
pub(crate) fn relu_forward<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let mut out = x.clone();
    for v in out.data_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    out
}

pub(crate) fn relu_backward<T: Scalar>(dy: &Tensor<T>, y: &Tensor<T>) -> Tensor<T> {
    let mut dx = dy.clone();
    for (d, &o) in dx.data_mut().iter_mut().zip(y.data()) {
        if o <= T::zero() {
            *d = T::zero();
        }
    }
    dx
}

/// 3x3 stride-2 pad-1 max pooling (the stem), with argmax indices cached
/// for backward. Ties take the first (row-major scan) maximum.
pub(crate) struct MaxPool {
    argmax: Vec<usize>,
    in_shape: Vec<usize>,
}

impl MaxPool {
    pub fn new() -> Self {
        MaxPool { argmax: Vec::new(), in_shape: Vec::new() }
    }

    pub fn forward<T: Scalar>(&mut self, x: &Tensor<T>) -> Tensor<T> {
        let (n, c, h, w) = shape4(x);
        let oh = (h + 2 - 3) / 2 + 1;
        let ow = (w + 2 - 3) / 2 + 1;
        let mut out = Tensor::zeros(&[n, c, oh, ow]);
        self.argmax = vec![0usize; n * c * oh * ow];
        self.in_shape = x.shape().to_vec();
        let data = x.data();
        let mut oi = 0usize;
        for s in 0..n {
            for ci in 0..c {
                let base = (s * c + ci) * h * w;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut best = T::neg_infinity();
                        let mut best_idx = 0usize;
                        for ky in 0..3usize {
                            let sy = (oy * 2 + ky) as isize - 1;
                            if sy < 0 || sy >= h as isize {
                                continue;
                            }
                            for kx in 0..3usize {
                                let sx = (ox * 2 + kx) as isize - 1;
                                if sx < 0 || sx >= w as isize {
                                    continue;
                                }
                                let idx = base + sy as usize * w + sx as usize;
                                if data[idx] > best {
                                    best = data[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                        out.data_mut()[oi] = best;
                        self.argmax[oi] = best_idx;
                        oi += 1;
                    }
                }
            }
        }
        out
    }

    pub fn backward<T: Scalar>(&self, dy: &Tensor<T>) -> Tensor<T> {
        let mut dx = Tensor::zeros(&self.in_shape);
        for (i, d) in dy.data().iter().enumerate() {
            let idx = self.argmax[i];
            dx.data_mut()[idx] = dx.data_mut()[idx] + *d;
        }
        dx
    }
}

/// [N,C,H,W] -> [N,C] mean over the spatial plane.
pub(crate) fn global_avg_pool<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let (n, c, h, w) = shape4(x);
    let plane = h * w;
    let mut out = Tensor::zeros(&[n, c]);
    for s in 0..n {
        for ci in 0..c {
            let off = (s * c + ci) * plane;
            let mut sum = T::zero();
            for v in &x.data()[off..off + plane] {
                sum = sum + *v;
            }
            out.data_mut()[s * c + ci] = sum / T::from_f64(plane as f64);
        }
    }
    out
}

pub(crate) fn global_avg_pool_backward<T: Scalar>(dy: &Tensor<T>, in_shape: &[usize]) -> Tensor<T> {
    let (n, c, h, w) = (in_shape[0], in_shape[1], in_shape[2], in_shape[3]);
    let plane = h * w;
    let mut dx = Tensor::zeros(in_shape);
    for s in 0..n {
        for ci in 0..c {
            let g = dy.data()[s * c + ci] / T::from_f64(plane as f64);
            let off = (s * c + ci) * plane;
            for v in &mut dx.data_mut()[off..off + plane] {
                *v = g;
            }
        }
    }
    dx
}

pub(crate) fn add_tensors<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    debug_assert_eq!(a.shape(), b.shape());
    let mut out = a.clone();
    for (o, &v) in out.data_mut().iter_mut().zip(b.data()) {
        *o = *o + v;
    }
    out
}

pub(crate) fn shape4<T: Scalar>(x: &Tensor<T>) -> (usize, usize, usize, usize) {
    let s = x.shape();
    debug_assert_eq!(s.len(), 4, "expected NCHW tensor, got {s:?}");
    (s[0], s[1], s[2], s[3])
}
