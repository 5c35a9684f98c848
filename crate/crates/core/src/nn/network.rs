use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::layer::{Layer, LayerSpec, Mode};
use super::loss::{check_same_shape, LossKind};
use super::{shape_err, NnError, Tensor};

/// A sequential stack of layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl Network {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, specs: &[LayerSpec], rng: &mut R) -> Result<Self, NnError> {
        if input_dim == 0 {
            return Err(NnError::InvalidConfig("input width 0".into()));
        }
        let mut width = input_dim;
        let mut layers = Vec::with_capacity(specs.len());
        for &spec in specs {
            let layer = Layer::build(spec, width, rng)?;
            width = layer.out_dim(width);
            layers.push(layer);
        }
        Ok(Network { input_dim, layers })
    }

    pub fn from_layers(input_dim: usize, layers: Vec<Layer>) -> Self {
        Network { input_dim, layers }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.iter().fold(self.input_dim, |w, l| l.out_dim(w))
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(Layer::spec).collect()
    }

    fn check_input(&self, x: &Tensor) -> Result<(), NnError> {
        if x.shape().len() != 2 || x.cols() != self.input_dim {
            return Err(shape_err(format!(
                "network expects width {}, got shape {:?}",
                self.input_dim,
                x.shape()
            )));
        }
        Ok(())
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut dyn RngCore) -> Result<Tensor, NnError> {
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &mut self.layers {
            h = layer.forward(&h, mode, rng)?;
        }
        Ok(h)
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor, NnError> {
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.infer_owned(h)?;
        }
        Ok(h)
    }

    /// Backpropagates the loss between the last train-mode output `y_hat` and
    /// `targets`, filling parameter gradients. Returns the gradient with
    /// respect to the network input.
    ///
    /// BCE after a trailing sigmoid uses the combined derivative `(ŷ−y)/n`.
    pub fn backward(&mut self, y_hat: &Tensor, targets: &Tensor, loss: LossKind) -> Result<Tensor, NnError> {
        check_same_shape(y_hat, targets)?;
        let fused = loss == LossKind::Bce && matches!(self.layers.last(), Some(Layer::Sigmoid(_)));
        let (dy, skip) = if fused {
            let g = LossKind::Bce.gradient(targets.data(), y_hat.data())?;
            let n = g.len() as f64;
            let data = y_hat
                .data()
                .iter()
                .zip(targets.data())
                .map(|(p, t)| (p - t) / n)
                .collect();
            (Tensor::new(y_hat.shape().to_vec(), data)?, 1)
        } else {
            let g = loss.gradient(targets.data(), y_hat.data())?;
            (Tensor::new(y_hat.shape().to_vec(), g)?, 0)
        };
        let end = self.layers.len() - skip;
        self.backward_range(0..end, dy)
    }

    /// Backpropagates an upstream gradient through all layers.
    pub fn backward_from(&mut self, dy: Tensor) -> Result<Tensor, NnError> {
        let n = self.layers.len();
        self.backward_range(0..n, dy)
    }

    fn backward_range(&mut self, range: core::ops::Range<usize>, mut dy: Tensor) -> Result<Tensor, NnError> {
        for layer in self.layers[range].iter_mut().rev() {
            dy = layer.backward(&dy)?;
        }
        Ok(dy)
    }

    pub fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut [f64], &[f64])) {
        for layer in &mut self.layers {
            layer.visit_params_mut(f);
        }
    }

    pub fn param_count(&mut self) -> usize {
        let mut n = 0;
        self.visit_params_mut(&mut |p, _| n += p.len());
        n
    }

    pub fn params_flat(&mut self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_params_mut(&mut |p, _| out.extend_from_slice(p));
        out
    }

    pub fn grads_flat(&mut self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_params_mut(&mut |_, g| out.extend_from_slice(g));
        out
    }

    pub fn set_params_flat(&mut self, values: &[f64]) -> Result<(), NnError> {
        let n = self.param_count();
        if n != values.len() {
            return Err(shape_err(format!("{n} parameters, got {}", values.len())));
        }
        let mut off = 0;
        self.visit_params_mut(&mut |p, _| {
            p.copy_from_slice(&values[off..off + p.len()]);
            off += p.len();
        });
        Ok(())
    }

    /// Parameters plus running statistics, in a stable order.
    pub fn state_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            layer.visit_state(&mut |s| out.extend_from_slice(s));
        }
        out
    }

    pub fn state_len(&self) -> usize {
        let mut n = 0;
        for layer in &self.layers {
            layer.visit_state(&mut |s| n += s.len());
        }
        n
    }

    pub fn set_state_flat(&mut self, values: &[f64]) -> Result<(), NnError> {
        let n = self.state_len();
        if n != values.len() {
            return Err(shape_err(format!("{n} state values, got {}", values.len())));
        }
        let mut off = 0;
        for layer in &mut self.layers {
            layer.visit_state_mut(&mut |s| {
                s.copy_from_slice(&values[off..off + s.len()]);
                off += s.len();
            });
        }
        Ok(())
    }

    /// FNV-1a over the bit patterns of every state value.
    pub fn checksum(&self) -> u64 {
        let mut h = crate::math::FNV_OFFSET;
        for layer in &self.layers {
            layer.visit_state(&mut |s| {
                for v in s {
                    h = crate::math::fnv1a(h, &v.to_bits().to_le_bytes());
                }
            });
        }
        h
    }

    /// Makes every dropout layer reuse its last mask on the next forward.
    pub fn set_dropout_replay(&mut self, replay: bool) {
        for layer in &mut self.layers {
            if let Layer::Dropout(d) = layer {
                d.replay = replay;
            }
        }
    }

    pub fn clear_caches(&mut self) {
        self.layers.iter_mut().for_each(Layer::clear_cache);
    }
}
