use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::tensor::{gemm, Tensor};
use super::{shape_err, NnError};
use crate::math::{sigmoid, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics for batch-norm, active dropout, forward caches kept.
    Train,
    /// Running statistics, dropout disabled.
    Infer,
}

/// Declarative layer description used to build a [`super::Network`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    Dense { out_dim: usize, bias: bool },
    PRelu,
    BatchNorm { momentum: f64, eps: f64 },
    Dropout { rate: f64 },
    Sigmoid,
}

impl LayerSpec {
    pub fn dense(out_dim: usize) -> Self {
        LayerSpec::Dense { out_dim, bias: true }
    }

    pub fn batchnorm() -> Self {
        LayerSpec::BatchNorm {
            momentum: 0.99,
            eps: 1e-3,
        }
    }
}

/// Fully connected layer `y = x·W + b`, `W` stored `in × out` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f64>,
    /// Empty when the layer has no bias.
    pub bias: Vec<f64>,
    grad_weight: Vec<f64>,
    grad_bias: Vec<f64>,
    input: Option<Tensor>,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn new<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, bias: bool, rng: &mut R) -> Self {
        let limit = sqrt(6.0 / (in_dim + out_dim) as f64);
        let weight = (0..in_dim * out_dim).map(|_| rng.random_range(-limit..limit)).collect();
        Self::from_parts(
            in_dim,
            out_dim,
            weight,
            if bias { vec![0.0; out_dim] } else { Vec::new() },
        )
    }

    pub fn from_parts(in_dim: usize, out_dim: usize, weight: Vec<f64>, bias: Vec<f64>) -> Self {
        let nb = bias.len();
        Dense {
            in_dim,
            out_dim,
            grad_weight: vec![0.0; weight.len()],
            grad_bias: vec![0.0; nb],
            weight,
            bias,
            input: None,
        }
    }

    pub fn has_bias(&self) -> bool {
        !self.bias.is_empty()
    }

    fn forward(&self, x: &Tensor) -> Tensor {
        let b = x.rows();
        let mut out = Tensor::zeros(&[b, self.out_dim]);
        if self.has_bias() {
            for r in 0..b {
                out.row_mut(r).copy_from_slice(&self.bias);
            }
        }
        gemm(
            b,
            self.in_dim,
            self.out_dim,
            (x.data(), self.in_dim as isize, 1),
            (&self.weight, self.out_dim as isize, 1),
            if self.has_bias() { 1.0 } else { 0.0 },
            out.data_mut(),
        );
        out
    }

    fn backward(&mut self, dy: &Tensor) -> Result<Tensor, NnError> {
        let x = self.input.as_ref().ok_or(NnError::MissingCache)?;
        let b = x.rows();
        // dW = xᵀ·dy
        gemm(
            self.in_dim,
            b,
            self.out_dim,
            (x.data(), 1, self.in_dim as isize),
            (dy.data(), self.out_dim as isize, 1),
            0.0,
            &mut self.grad_weight,
        );
        if self.has_bias() {
            self.grad_bias.iter_mut().for_each(|g| *g = 0.0);
            for row in dy.iter_rows() {
                for (g, d) in self.grad_bias.iter_mut().zip(row) {
                    *g += d;
                }
            }
        }
        // dx = dy·Wᵀ
        let mut dx = Tensor::zeros(&[b, self.in_dim]);
        gemm(
            b,
            self.out_dim,
            self.in_dim,
            (dy.data(), self.out_dim as isize, 1),
            (&self.weight, 1, self.out_dim as isize),
            0.0,
            dx.data_mut(),
        );
        Ok(dx)
    }
}

/// Parametric ReLU with one learnable negative slope per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct PRelu {
    pub slope: Vec<f64>,
    grad_slope: Vec<f64>,
    input: Option<Tensor>,
}

impl PRelu {
    pub fn new(width: usize, init: f64) -> Self {
        PRelu {
            slope: vec![init; width],
            grad_slope: vec![0.0; width],
            input: None,
        }
    }

    fn forward(&self, mut y: Tensor) -> Tensor {
        let w = self.slope.len();
        for row in y.data_mut().chunks_exact_mut(w) {
            for (v, a) in row.iter_mut().zip(&self.slope) {
                *v = v.max(0.0) + a * v.min(0.0);
            }
        }
        y
    }

    fn backward(&mut self, dy: &Tensor) -> Result<Tensor, NnError> {
        let x = self.input.as_ref().ok_or(NnError::MissingCache)?;
        let w = self.slope.len();
        self.grad_slope.iter_mut().for_each(|g| *g = 0.0);
        let mut dx = dy.clone();
        for (drow, xrow) in dx.data_mut().chunks_exact_mut(w).zip(x.data().chunks_exact(w)) {
            for j in 0..w {
                if xrow[j] <= 0.0 {
                    self.grad_slope[j] += drow[j] * xrow[j];
                    drow[j] *= self.slope[j];
                }
            }
        }
        Ok(dx)
    }
}

/// Batch normalization over the sample axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
    grad_gamma: Vec<f64>,
    grad_beta: Vec<f64>,
    cache: Option<(Tensor, Vec<f64>)>,
}

impl BatchNorm {
    pub fn new(width: usize, momentum: f64, eps: f64) -> Self {
        BatchNorm {
            gamma: vec![1.0; width],
            beta: vec![0.0; width],
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
            momentum,
            eps,
            grad_gamma: vec![0.0; width],
            grad_beta: vec![0.0; width],
            cache: None,
        }
    }

    fn width(&self) -> usize {
        self.gamma.len()
    }

    fn forward_infer(&self, mut y: Tensor) -> Tensor {
        let w = self.width();
        // y = scale·x + shift per column
        let scale: Vec<f64> = (0..w)
            .map(|j| self.gamma[j] / sqrt(self.running_var[j] + self.eps))
            .collect();
        let shift: Vec<f64> = (0..w).map(|j| self.beta[j] - self.running_mean[j] * scale[j]).collect();
        for row in y.data_mut().chunks_exact_mut(w) {
            for j in 0..w {
                row[j] = row[j] * scale[j] + shift[j];
            }
        }
        y
    }

    fn forward_train(&mut self, x: &Tensor) -> Tensor {
        let w = self.width();
        let n = x.rows() as f64;
        let mut mean = vec![0.0; w];
        for row in x.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; w];
        for row in x.iter_rows() {
            for j in 0..w {
                let d = row[j] - mean[j];
                var[j] += d * d;
            }
        }
        var.iter_mut().for_each(|v| *v /= n);
        let inv: Vec<f64> = var.iter().map(|v| 1.0 / sqrt(v + self.eps)).collect();
        let mut xhat = x.clone();
        for row in xhat.data_mut().chunks_exact_mut(w) {
            for j in 0..w {
                row[j] = (row[j] - mean[j]) * inv[j];
            }
        }
        let mut y = xhat.clone();
        for row in y.data_mut().chunks_exact_mut(w) {
            for j in 0..w {
                row[j] = self.gamma[j] * row[j] + self.beta[j];
            }
        }
        let m = self.momentum;
        for j in 0..w {
            self.running_mean[j] = m * self.running_mean[j] + (1.0 - m) * mean[j];
            self.running_var[j] = m * self.running_var[j] + (1.0 - m) * var[j];
        }
        self.cache = Some((xhat, inv));
        y
    }

    fn backward(&mut self, dy: &Tensor) -> Result<Tensor, NnError> {
        let (xhat, inv) = self.cache.as_ref().ok_or(NnError::MissingCache)?;
        let w = self.width();
        let n = dy.rows() as f64;
        let mut sum_dxhat = vec![0.0; w];
        let mut sum_dxhat_xhat = vec![0.0; w];
        self.grad_gamma.iter_mut().for_each(|g| *g = 0.0);
        self.grad_beta.iter_mut().for_each(|g| *g = 0.0);
        for (drow, xrow) in dy.iter_rows().zip(xhat.iter_rows()) {
            for j in 0..w {
                self.grad_beta[j] += drow[j];
                self.grad_gamma[j] += drow[j] * xrow[j];
                let dxh = drow[j] * self.gamma[j];
                sum_dxhat[j] += dxh;
                sum_dxhat_xhat[j] += dxh * xrow[j];
            }
        }
        let mut dx = dy.clone();
        for (drow, xrow) in dx.data_mut().chunks_exact_mut(w).zip(xhat.data().chunks_exact(w)) {
            for j in 0..w {
                let dxh = drow[j] * self.gamma[j];
                drow[j] = inv[j] / n * (n * dxh - sum_dxhat[j] - xrow[j] * sum_dxhat_xhat[j]);
            }
        }
        Ok(dx)
    }
}

/// Inverted dropout: survivors are scaled by `1/(1−rate)` at train time.
#[derive(Debug, Clone, PartialEq)]
pub struct Dropout {
    pub rate: f64,
    /// Reuse the previous mask on the next train-mode forward (for gradient checks).
    pub replay: bool,
    mask: Option<Vec<f64>>,
}

impl Dropout {
    pub fn new(rate: f64) -> Self {
        Dropout {
            rate,
            replay: false,
            mask: None,
        }
    }

    fn forward_train(&mut self, x: &Tensor, rng: &mut dyn RngCore) -> Tensor {
        let n = x.data().len();
        let reuse = self.replay && self.mask.as_ref().is_some_and(|m| m.len() == n);
        if !reuse {
            let keep = 1.0 - self.rate;
            let scale = if keep > 0.0 { 1.0 / keep } else { 0.0 };
            let mask = (0..n)
                .map(|_| {
                    if self.rate == 0.0 || rng.random::<f64>() >= self.rate {
                        scale
                    } else {
                        0.0
                    }
                })
                .collect();
            self.mask = Some(mask);
        }
        let mask = self.mask.as_ref().expect("mask set above");
        let mut y = x.clone();
        for (v, m) in y.data_mut().iter_mut().zip(mask) {
            *v *= m;
        }
        y
    }

    fn backward(&mut self, dy: &Tensor) -> Result<Tensor, NnError> {
        let mask = self.mask.as_ref().ok_or(NnError::MissingCache)?;
        let mut dx = dy.clone();
        for (d, m) in dx.data_mut().iter_mut().zip(mask) {
            *d *= m;
        }
        Ok(dx)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sigmoid {
    output: Option<Tensor>,
}

impl Sigmoid {
    fn forward(mut y: Tensor) -> Tensor {
        y.data_mut().iter_mut().for_each(|v| *v = sigmoid(*v));
        y
    }

    fn backward(&mut self, dy: &Tensor) -> Result<Tensor, NnError> {
        let y = self.output.as_ref().ok_or(NnError::MissingCache)?;
        let mut dx = dy.clone();
        for (d, &s) in dx.data_mut().iter_mut().zip(y.data()) {
            *d *= s * (1.0 - s);
        }
        Ok(dx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    PRelu(PRelu),
    BatchNorm(BatchNorm),
    Dropout(Dropout),
    Sigmoid(Sigmoid),
}

impl Layer {
    pub fn build<R: Rng + ?Sized>(spec: LayerSpec, in_dim: usize, rng: &mut R) -> Result<Layer, NnError> {
        Ok(match spec {
            LayerSpec::Dense { out_dim, bias } => {
                if out_dim == 0 || in_dim == 0 {
                    return Err(NnError::InvalidConfig(format!("dense {in_dim}->{out_dim}")));
                }
                Layer::Dense(Dense::new(in_dim, out_dim, bias, rng))
            }
            LayerSpec::PRelu => Layer::PRelu(PRelu::new(in_dim, 0.25)),
            LayerSpec::BatchNorm { momentum, eps } => {
                if !(eps > 0.0) || !(0.0..1.0).contains(&momentum) {
                    return Err(NnError::InvalidConfig(format!(
                        "batchnorm momentum {momentum}, eps {eps}"
                    )));
                }
                Layer::BatchNorm(BatchNorm::new(in_dim, momentum, eps))
            }
            LayerSpec::Dropout { rate } => {
                if !(0.0..1.0).contains(&rate) {
                    return Err(NnError::InvalidConfig(format!("dropout rate {rate}")));
                }
                Layer::Dropout(Dropout::new(rate))
            }
            LayerSpec::Sigmoid => Layer::Sigmoid(Sigmoid::default()),
        })
    }

    pub fn spec(&self) -> LayerSpec {
        match self {
            Layer::Dense(d) => LayerSpec::Dense {
                out_dim: d.out_dim,
                bias: d.has_bias(),
            },
            Layer::PRelu(_) => LayerSpec::PRelu,
            Layer::BatchNorm(b) => LayerSpec::BatchNorm {
                momentum: b.momentum,
                eps: b.eps,
            },
            Layer::Dropout(d) => LayerSpec::Dropout { rate: d.rate },
            Layer::Sigmoid(_) => LayerSpec::Sigmoid,
        }
    }

    /// Output width for an input of width `in_dim`.
    pub fn out_dim(&self, in_dim: usize) -> usize {
        match self {
            Layer::Dense(d) => d.out_dim,
            _ => in_dim,
        }
    }

    fn expected_in(&self) -> Option<usize> {
        match self {
            Layer::Dense(d) => Some(d.in_dim),
            Layer::PRelu(p) => Some(p.slope.len()),
            Layer::BatchNorm(b) => Some(b.width()),
            _ => None,
        }
    }

    fn check_input(&self, x: &Tensor) -> Result<(), NnError> {
        match self.expected_in() {
            Some(w) if w != x.cols() => Err(shape_err(format!("layer expects width {w}, got {}", x.cols()))),
            _ => Ok(()),
        }
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut dyn RngCore) -> Result<Tensor, NnError> {
        if mode == Mode::Infer {
            return self.infer(x);
        }
        self.check_input(x)?;
        Ok(match self {
            Layer::Dense(d) => {
                let y = d.forward(x);
                d.input = Some(x.clone());
                y
            }
            Layer::PRelu(p) => {
                let y = p.forward(x.clone());
                p.input = Some(x.clone());
                y
            }
            Layer::BatchNorm(b) => b.forward_train(x),
            Layer::Dropout(d) => d.forward_train(x, rng),
            Layer::Sigmoid(s) => {
                let y = Sigmoid::forward(x.clone());
                s.output = Some(y.clone());
                y
            }
        })
    }

    /// Inference-mode forward; never touches caches or running statistics.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor, NnError> {
        match self {
            Layer::Dense(d) => {
                self.check_input(x)?;
                Ok(d.forward(x))
            }
            _ => self.infer_owned(x.clone()),
        }
    }

    /// [`Layer::infer`] reusing the input buffer where the layer is elementwise.
    pub fn infer_owned(&self, x: Tensor) -> Result<Tensor, NnError> {
        self.check_input(&x)?;
        Ok(match self {
            Layer::Dense(d) => d.forward(&x),
            Layer::PRelu(p) => p.forward(x),
            Layer::BatchNorm(b) => b.forward_infer(x),
            Layer::Dropout(_) => x,
            Layer::Sigmoid(_) => Sigmoid::forward(x),
        })
    }

    pub fn backward(&mut self, dy: &Tensor) -> Result<Tensor, NnError> {
        match self {
            Layer::Dense(d) => d.backward(dy),
            Layer::PRelu(p) => p.backward(dy),
            Layer::BatchNorm(b) => b.backward(dy),
            Layer::Dropout(d) => d.backward(dy),
            Layer::Sigmoid(s) => s.backward(dy),
        }
    }

    /// Visits every trainable parameter slot with its current gradient.
    pub fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut [f64], &[f64])) {
        match self {
            Layer::Dense(d) => {
                f(&mut d.weight, &d.grad_weight);
                if d.has_bias() {
                    f(&mut d.bias, &d.grad_bias);
                }
            }
            Layer::PRelu(p) => f(&mut p.slope, &p.grad_slope),
            Layer::BatchNorm(b) => {
                f(&mut b.gamma, &b.grad_gamma);
                f(&mut b.beta, &b.grad_beta);
            }
            Layer::Dropout(_) | Layer::Sigmoid(_) => {}
        }
    }

    /// Every persisted array (parameters and running statistics) in a fixed order.
    pub fn visit_state(&self, f: &mut dyn FnMut(&[f64])) {
        match self {
            Layer::Dense(d) => {
                f(&d.weight);
                f(&d.bias);
            }
            Layer::PRelu(p) => f(&p.slope),
            Layer::BatchNorm(b) => {
                f(&b.gamma);
                f(&b.beta);
                f(&b.running_mean);
                f(&b.running_var);
            }
            Layer::Dropout(_) | Layer::Sigmoid(_) => {}
        }
    }

    pub fn visit_state_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        match self {
            Layer::Dense(d) => {
                f(&mut d.weight);
                f(&mut d.bias);
            }
            Layer::PRelu(p) => f(&mut p.slope),
            Layer::BatchNorm(b) => {
                f(&mut b.gamma);
                f(&mut b.beta);
                f(&mut b.running_mean);
                f(&mut b.running_var);
            }
            Layer::Dropout(_) | Layer::Sigmoid(_) => {}
        }
    }

    pub fn clear_cache(&mut self) {
        match self {
            Layer::Dense(d) => d.input = None,
            Layer::PRelu(p) => p.input = None,
            Layer::BatchNorm(b) => b.cache = None,
            Layer::Dropout(d) => d.mask = None,
            Layer::Sigmoid(s) => s.output = None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn dense_identity() {
        let d = Dense::from_parts(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]);
        let x = Tensor::from_rows(&[[3.0, -4.0], [0.5, 2.0]]).unwrap();
        assert_eq!(Layer::Dense(d).infer(&x).unwrap(), x);
    }

    #[test]
    fn prelu_definition() {
        let x = Tensor::from_rows(&[[-1.0, 2.0]]).unwrap();
        let y = Layer::PRelu(PRelu::new(2, 0.25)).infer(&x).unwrap();
        assert_eq!(y.data(), &[-0.25, 2.0]);
    }

    #[test]
    fn dropout_infer_is_identity() {
        let x = Tensor::from_rows(&[[1.5, -2.0, 3.25]]).unwrap();
        let mut l = Layer::Dropout(Dropout::new(0.5));
        let y = l.forward(&x, Mode::Infer, &mut stream(0, 0)).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn dropout_train_scales_survivors() {
        let x = Tensor::new(vec![1, 1000], vec![1.0; 1000]).unwrap();
        let mut l = Layer::Dropout(Dropout::new(0.5));
        let y = l.forward(&x, Mode::Train, &mut stream(0, 0)).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0 || v == 2.0));
        let kept = y.data().iter().filter(|&&v| v == 2.0).count();
        assert!((400..600).contains(&kept));
    }

    #[test]
    fn batchnorm_train_normalizes_and_infer_is_affine() {
        let x = Tensor::from_rows(&[[1.0, 10.0], [3.0, 20.0], [5.0, 60.0]]).unwrap();
        let mut bn = Layer::BatchNorm(BatchNorm::new(2, 0.9, 1e-3));
        let y = bn.forward(&x, Mode::Train, &mut stream(0, 0)).unwrap();
        for j in 0..2 {
            let mean: f64 = (0..3).map(|r| y.row(r)[j]).sum::<f64>() / 3.0;
            assert!(mean.abs() < 1e-12);
        }
        // infer output is a·x + b per column: check linearity on three points
        let probe = Tensor::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).unwrap();
        let z = bn.infer(&probe).unwrap();
        for j in 0..2 {
            let d1 = z.row(1)[j] - z.row(0)[j];
            let d2 = z.row(2)[j] - z.row(1)[j];
            assert!((d1 - d2).abs() < 1e-12);
        }
    }

    #[test]
    fn width_mismatch_is_reported() {
        let d = Dense::from_parts(3, 1, vec![0.0; 3], vec![0.0]);
        let x = Tensor::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(Layer::Dense(d).infer(&x), Err(NnError::ShapeMismatch(_))));
    }

    #[test]
    fn backward_without_forward_fails() {
        let mut l = Layer::PRelu(PRelu::new(2, 0.25));
        let dy = Tensor::zeros(&[1, 2]);
        assert_eq!(l.backward(&dy), Err(NnError::MissingCache));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut rng = stream(0, 0);
        assert!(Layer::build(LayerSpec::Dropout { rate: 1.0 }, 4, &mut rng).is_err());
        assert!(Layer::build(
            LayerSpec::BatchNorm {
                momentum: 0.9,
                eps: 0.0
            },
            4,
            &mut rng
        )
        .is_err());
        assert!(Layer::build(LayerSpec::dense(0), 4, &mut rng).is_err());
    }
}
