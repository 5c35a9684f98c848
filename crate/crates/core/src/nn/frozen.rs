use alloc::vec::Vec;

use super::layer::Layer;
use super::network::Network;
use super::tensor::{gemm, Tensor};
use super::{shape_err, NnError};
use crate::math::{sigmoid, sqrt};

#[derive(Debug, Clone, PartialEq)]
enum Op {
    /// `y = x·W + b`, `W` stored `in × out`.
    Linear {
        in_dim: usize,
        out_dim: usize,
        weight: Vec<f64>,
        bias: Vec<f64>,
    },
    /// Per-column `y = x·scale + shift`.
    Affine {
        scale: Vec<f64>,
        shift: Vec<f64>,
    },
    PRelu(Vec<f64>),
    Sigmoid,
}

/// Inference-only copy of a [`Network`]: batch-norm statistics are folded
/// into the preceding dense layer and dropout is removed. Outputs match
/// [`Network::infer`] up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenNetwork {
    input_dim: usize,
    output_dim: usize,
    ops: Vec<Op>,
}

impl FrozenNetwork {
    pub fn new(net: &Network) -> Self {
        let mut ops: Vec<Op> = Vec::new();
        for layer in net.layers() {
            match layer {
                Layer::Dense(d) => ops.push(Op::Linear {
                    in_dim: d.in_dim,
                    out_dim: d.out_dim,
                    weight: d.weight.clone(),
                    bias: if d.has_bias() {
                        d.bias.clone()
                    } else {
                        alloc::vec![0.0; d.out_dim]
                    },
                }),
                Layer::BatchNorm(b) => {
                    let scale: Vec<f64> = b
                        .gamma
                        .iter()
                        .zip(&b.running_var)
                        .map(|(g, v)| g / sqrt(v + b.eps))
                        .collect();
                    let shift: Vec<f64> = (0..scale.len())
                        .map(|j| b.beta[j] - b.running_mean[j] * scale[j])
                        .collect();
                    push_affine(&mut ops, scale, shift);
                }
                Layer::PRelu(p) => ops.push(Op::PRelu(p.slope.clone())),
                Layer::Dropout(_) => {}
                Layer::Sigmoid(_) => ops.push(Op::Sigmoid),
            }
        }
        FrozenNetwork {
            input_dim: net.input_dim(),
            output_dim: net.output_dim(),
            ops,
        }
    }

    /// Prepends the per-column map `x·scale + shift` to the network.
    pub fn with_input_affine(mut self, scale: &[f64], shift: &[f64]) -> Result<Self, NnError> {
        if scale.len() != self.input_dim || shift.len() != self.input_dim {
            return Err(shape_err("input affine width differs from the network input"));
        }
        match self.ops.first_mut() {
            Some(Op::Linear {
                out_dim, weight, bias, ..
            }) => {
                let n = *out_dim;
                for (i, row) in weight.chunks_exact_mut(n).enumerate() {
                    for (j, w) in row.iter_mut().enumerate() {
                        bias[j] += shift[i] * *w;
                        *w *= scale[i];
                    }
                }
            }
            _ => self.ops.insert(
                0,
                Op::Affine {
                    scale: scale.to_vec(),
                    shift: shift.to_vec(),
                },
            ),
        }
        Ok(self)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor, NnError> {
        if x.cols() != self.input_dim {
            return Err(shape_err(alloc::format!(
                "frozen network expects {} columns, got {}",
                self.input_dim,
                x.cols()
            )));
        }
        let mut h: Option<Tensor> = None;
        for op in &self.ops {
            let cur = h.as_ref().unwrap_or(x);
            let b = cur.rows();
            let next = match op {
                Op::Linear {
                    in_dim,
                    out_dim,
                    weight,
                    bias,
                } => {
                    let mut out = Tensor::zeros(&[b, *out_dim]);
                    for row in out.data_mut().chunks_exact_mut(*out_dim) {
                        row.copy_from_slice(bias);
                    }
                    gemm(
                        b,
                        *in_dim,
                        *out_dim,
                        (cur.data(), *in_dim as isize, 1),
                        (weight, *out_dim as isize, 1),
                        1.0,
                        out.data_mut(),
                    );
                    out
                }
                Op::Affine { scale, shift } => {
                    let mut y = h.take().unwrap_or_else(|| x.clone());
                    for row in y.data_mut().chunks_exact_mut(scale.len()) {
                        for j in 0..row.len() {
                            row[j] = row[j] * scale[j] + shift[j];
                        }
                    }
                    y
                }
                Op::PRelu(slope) => {
                    let mut y = h.take().unwrap_or_else(|| x.clone());
                    for row in y.data_mut().chunks_exact_mut(slope.len()) {
                        for (v, a) in row.iter_mut().zip(slope) {
                            *v = v.max(0.0) + a * v.min(0.0);
                        }
                    }
                    y
                }
                Op::Sigmoid => {
                    let mut y = h.take().unwrap_or_else(|| x.clone());
                    y.data_mut().iter_mut().for_each(|v| *v = sigmoid(*v));
                    y
                }
            };
            h = Some(next);
        }
        Ok(h.unwrap_or_else(|| x.clone()))
    }
}

fn push_affine(ops: &mut Vec<Op>, scale: Vec<f64>, shift: Vec<f64>) {
    if let Some(Op::Linear {
        out_dim, weight, bias, ..
    }) = ops.last_mut()
    {
        for row in weight.chunks_exact_mut(*out_dim) {
            for (w, s) in row.iter_mut().zip(&scale) {
                *w *= s;
            }
        }
        for j in 0..bias.len() {
            bias[j] = bias[j] * scale[j] + shift[j];
        }
        return;
    }
    ops.push(Op::Affine { scale, shift });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{LayerSpec, Mode};
    use crate::rng::stream;

    fn trained_like() -> Network {
        let specs = [
            LayerSpec::Dense {
                out_dim: 7,
                bias: false,
            },
            LayerSpec::batchnorm(),
            LayerSpec::PRelu,
            LayerSpec::Dropout { rate: 0.3 },
            LayerSpec::dense(5),
            LayerSpec::PRelu,
            LayerSpec::batchnorm(),
            LayerSpec::dense(1),
            LayerSpec::Sigmoid,
        ];
        let mut net = Network::new(4, &specs, &mut stream(1, 0)).unwrap();
        // move the running statistics away from their initial values
        let x = Tensor::matrix(32, 4, (0..128).map(|i| (i as f64 * 0.7).sin() * 3.0 + 1.0).collect()).unwrap();
        for _ in 0..20 {
            net.forward(&x, Mode::Train, &mut stream(1, 1)).unwrap();
        }
        net
    }

    #[test]
    fn matches_network_inference() {
        let net = trained_like();
        let frozen = FrozenNetwork::new(&net);
        let x = Tensor::matrix(9, 4, (0..36).map(|i| (i as f64 * 1.3).cos() * 2.0).collect()).unwrap();
        let a = net.infer(&x).unwrap();
        let b = frozen.infer(&x).unwrap();
        for (u, v) in a.data().iter().zip(b.data()) {
            assert!((u - v).abs() < 1e-12, "{u} vs {v}");
        }
    }

    #[test]
    fn input_affine_is_applied_first() {
        let net = trained_like();
        let scale = [0.5, 2.0, 1.0, -1.0];
        let shift = [0.1, -0.2, 0.0, 3.0];
        let frozen = FrozenNetwork::new(&net).with_input_affine(&scale, &shift).unwrap();
        let x = Tensor::matrix(6, 4, (0..24).map(|i| i as f64 * 0.25 - 2.0).collect()).unwrap();
        let mut xs = x.clone();
        for row in xs.data_mut().chunks_exact_mut(4) {
            for j in 0..4 {
                row[j] = row[j] * scale[j] + shift[j];
            }
        }
        let a = net.infer(&xs).unwrap();
        let b = frozen.infer(&x).unwrap();
        for (u, v) in a.data().iter().zip(b.data()) {
            assert!((u - v).abs() < 1e-12);
        }
        assert!(FrozenNetwork::new(&net).with_input_affine(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn rejects_wrong_width() {
        let frozen = FrozenNetwork::new(&trained_like());
        assert!(frozen.infer(&Tensor::zeros(&[2, 3])).is_err());
    }
}
