use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use super::{shape_err, Network, NnError};
use crate::math::{powi, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    Sgd,
    Adam,
    Nadam,
    Adamax,
    Rmsprop,
    Adagrad,
    Adadelta,
}

impl Algo {
    pub const ALL: [Algo; 7] = [
        Algo::Sgd,
        Algo::Adam,
        Algo::Nadam,
        Algo::Adamax,
        Algo::Rmsprop,
        Algo::Adagrad,
        Algo::Adadelta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Sgd => "sgd",
            Algo::Adam => "adam",
            Algo::Nadam => "nadam",
            Algo::Adamax => "adamax",
            Algo::Rmsprop => "rmsprop",
            Algo::Adagrad => "adagrad",
            Algo::Adadelta => "adadelta",
        }
    }
}

impl core::fmt::Display for Algo {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == lower)
            .ok_or_else(|| NnError::UnknownAlgo(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub algo: Algo,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decay rate for RMSprop and Adadelta.
    pub rho: f64,
}

impl OptimizerConfig {
    /// Conventional defaults for each algorithm.
    pub fn defaults(algo: Algo) -> Self {
        let (lr, rho, eps) = match algo {
            Algo::Sgd => (0.01, 0.9, 1e-8),
            Algo::Adam | Algo::Nadam | Algo::Adamax => (0.001, 0.9, 1e-8),
            Algo::Rmsprop => (0.001, 0.9, 1e-8),
            Algo::Adagrad => (0.01, 0.9, 1e-8),
            Algo::Adadelta => (1.0, 0.95, 1e-6),
        };
        OptimizerConfig {
            algo,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps,
            rho,
        }
    }

    pub fn with_lr(mut self, lr: f64) -> Self {
        self.lr = lr;
        self
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let unit = |x: f64| (0.0..1.0).contains(&x);
        if !(self.lr > 0.0) {
            return Err(NnError::InvalidConfig(format!("learning rate {}", self.lr)));
        }
        if !unit(self.beta1) || !unit(self.beta2) || !unit(self.rho) {
            return Err(NnError::InvalidConfig(format!(
                "decay rates β1={} β2={} ρ={}",
                self.beta1, self.beta2, self.rho
            )));
        }
        if !(self.eps > 0.0) {
            return Err(NnError::InvalidConfig(format!("epsilon {}", self.eps)));
        }
        Ok(())
    }
}

/// Per-parameter-slot accumulators. `m` holds first moments (or E[g²] for
/// RMSprop/Adagrad/Adadelta); `v` holds second moments, the Adamax infinity
/// norm, or Adadelta's E[Δ²].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlotState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl SlotState {
    pub fn zeros(n: usize) -> Self {
        SlotState {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

/// Applies one update of `cfg.algo` to `params`. `t` is the 1-based step index.
pub fn optimizer_step(
    cfg: &OptimizerConfig,
    state: &mut SlotState,
    params: &mut [f64],
    grads: &[f64],
    t: u64,
) -> Result<(), NnError> {
    let n = params.len();
    if grads.len() != n {
        return Err(shape_err(format!("{n} parameters, {} gradients", grads.len())));
    }
    if state.m.len() != n || state.v.len() != n {
        *state = SlotState::zeros(n);
    }
    let t = t.max(1);
    let ti = t.min(i32::MAX as u64) as i32;
    let (lr, b1, b2, eps, rho) = (cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.rho);
    let bc1 = 1.0 - powi(b1, ti);
    let bc2 = 1.0 - powi(b2, ti);
    let SlotState { m, v } = state;
    for i in 0..n {
        let g = grads[i];
        match cfg.algo {
            Algo::Sgd => params[i] -= lr * g,
            Algo::Adam => {
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                params[i] -= lr * m_hat / (sqrt(v_hat) + eps);
            }
            Algo::Nadam => {
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                let look = b1 * m_hat + (1.0 - b1) * g / bc1;
                params[i] -= lr * look / (sqrt(v_hat) + eps);
            }
            Algo::Adamax => {
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                let u = (b2 * v[i]).max(g.abs());
                v[i] = u;
                if u > 0.0 {
                    params[i] -= lr / bc1 * m[i] / u;
                }
            }
            Algo::Rmsprop => {
                m[i] = rho * m[i] + (1.0 - rho) * g * g;
                params[i] -= lr * g / sqrt(m[i] + eps);
            }
            Algo::Adagrad => {
                m[i] += g * g;
                params[i] -= lr * g / (sqrt(m[i]) + eps);
            }
            Algo::Adadelta => {
                m[i] = rho * m[i] + (1.0 - rho) * g * g;
                let delta = -sqrt(v[i] + eps) / sqrt(m[i] + eps) * g;
                v[i] = rho * v[i] + (1.0 - rho) * delta * delta;
                params[i] += lr * delta;
            }
        }
    }
    Ok(())
}

/// Optimizer bound to the parameter layout of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    config: OptimizerConfig,
    slots: Vec<SlotState>,
    t: u64,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig) -> Result<Self, NnError> {
        config.validate()?;
        Ok(Optimizer {
            config,
            slots: Vec::new(),
            t: 0,
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Applies one update to every parameter slot of `net` using its stored gradients.
    pub fn step(&mut self, net: &mut Network) -> Result<(), NnError> {
        self.t += 1;
        let t = self.t;
        let cfg = self.config;
        let slots = &mut self.slots;
        let mut idx = 0;
        let mut result = Ok(());
        net.visit_params_mut(&mut |p, g| {
            if slots.len() <= idx {
                slots.push(SlotState::zeros(p.len()));
            }
            if result.is_ok() {
                result = optimizer_step(&cfg, &mut slots[idx], p, g, t);
            }
            idx += 1;
        });
        result
    }
}
