//! Shared-encoder model: a confidence head that decides whether a pose is
//! solvable and an estimation head that predicts its 6×6 Jacobian, gated by
//! the confidence.

mod container;
mod train;

pub use container::{FORMAT_VERSION, MAGIC};
pub use train::{
    estimation_loss, fit_scalers, pretrain_encoder, train_cycle, Clock, EpochRecord, NoClock, Phase, TrainConfig,
    TrainHistory,
};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

use crate::dataset::{DYNAMIC_WIDTH, KINEMATIC_WIDTH};
use crate::kinematics::JacobianMatrix;
use crate::nn::{FrozenNetwork, LayerSpec, Network, NnError, ScalerState, Tensor};
use crate::rng::substream;
use crate::workspace::{ConfidenceModel, WorkspaceError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid hidden plan: {0}")]
    BadPlan(String),
    #[error("feature width {got} does not match the model input width {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("dataset has no usable rows")]
    EmptyDataset,
    #[error("corrupt model container in section `{section}`")]
    CorruptContainer { section: &'static str },
    #[error("unsupported container version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("threshold {0} must lie in (0, 1)")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Hidden-layer widths and regularization of the combined model.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenPlan {
    /// Encoder dense widths; the last entry is the representation width.
    pub encoder: Vec<usize>,
    /// Hidden widths of the confidence head before its output layer.
    pub conf_head: Vec<usize>,
    /// Hidden widths of the estimation head before its output layer.
    pub est_head: Vec<usize>,
    pub dropout: f64,
    /// Trailing encoder layers (including the representation layer) that get
    /// batch-norm and dropout.
    pub encoder_regularized: usize,
    /// Leading head layers that get batch-norm and dropout.
    pub head_regularized: usize,
}

impl Default for HiddenPlan {
    fn default() -> Self {
        HiddenPlan {
            encoder: alloc::vec![256, 512, 1024, 2048, 2150],
            conf_head: alloc::vec![1024, 512, 256, 128, 64, 32, 16],
            est_head: alloc::vec![1024, 512, 256, 128, 64, 32, 16],
            dropout: 0.5,
            encoder_regularized: 5,
            head_regularized: 4,
        }
    }
}

impl HiddenPlan {
    /// A reduced plan with the same layer structure, sized for single-machine runs.
    pub fn desk() -> Self {
        HiddenPlan {
            encoder: alloc::vec![48, 96, 96, 96, 96],
            conf_head: alloc::vec![48, 32, 32, 16, 16, 16, 16],
            est_head: alloc::vec![96, 96, 64, 64, 64, 64, 64],
            dropout: 0.0,
            encoder_regularized: 5,
            head_regularized: 4,
        }
    }

    pub fn representation_width(&self) -> usize {
        *self.encoder.last().unwrap_or(&0)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.encoder.is_empty() || self.conf_head.is_empty() || self.est_head.is_empty() {
            return Err(ModelError::BadPlan("encoder and heads need at least one layer".into()));
        }
        if self
            .encoder
            .iter()
            .chain(&self.conf_head)
            .chain(&self.est_head)
            .any(|&w| w == 0)
        {
            return Err(ModelError::BadPlan("layer width 0".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::BadPlan(format!("dropout {}", self.dropout)));
        }
        Ok(())
    }

    fn block(specs: &mut Vec<LayerSpec>, width: usize, regularized: bool, dropout: f64) {
        if regularized {
            specs.push(LayerSpec::Dense {
                out_dim: width,
                bias: false,
            });
            specs.push(LayerSpec::batchnorm());
            specs.push(LayerSpec::PRelu);
            if dropout > 0.0 {
                specs.push(LayerSpec::Dropout { rate: dropout });
            }
        } else {
            specs.push(LayerSpec::dense(width));
            specs.push(LayerSpec::PRelu);
        }
    }

    pub fn encoder_specs(&self) -> Vec<LayerSpec> {
        let n = self.encoder.len();
        let first_reg = n.saturating_sub(self.encoder_regularized);
        let mut specs = Vec::new();
        for (i, &w) in self.encoder.iter().enumerate() {
            Self::block(&mut specs, w, i >= first_reg, self.dropout);
        }
        specs
    }

    /// Confidence head: hidden blocks, one output unit, sigmoid.
    pub fn conf_head_specs(&self) -> Vec<LayerSpec> {
        self.head_specs(&self.conf_head, 1, true)
    }

    /// Estimation head: hidden blocks and a linear 36-wide output.
    pub fn est_head_specs(&self) -> Vec<LayerSpec> {
        self.head_specs(&self.est_head, JACOBIAN_WIDTH, false)
    }

    fn head_specs(&self, widths: &[usize], outputs: usize, sigmoid: bool) -> Vec<LayerSpec> {
        let mut specs = Vec::new();
        for (i, &w) in widths.iter().enumerate() {
            Self::block(&mut specs, w, i < self.head_regularized, self.dropout);
        }
        specs.push(LayerSpec::dense(outputs));
        if sigmoid {
            specs.push(LayerSpec::Sigmoid);
        }
        specs
    }
}

pub const JACOBIAN_WIDTH: usize = 36;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

const INIT_DOMAIN: u64 = 0x1a17;

#[derive(Debug, Clone, PartialEq)]
pub struct CombinedModel {
    pub(crate) input_dim: usize,
    pub(crate) encoder: Network,
    pub(crate) conf_head: Network,
    pub(crate) est_head: Network,
    /// Standardization of input features; fitted by the first training call.
    pub input_scaler: Option<ScalerState>,
    /// Min-max scaling of Jacobian targets to `[−1, 1]`.
    pub target_scaler: Option<ScalerState>,
    pub(crate) threshold: f64,
}

/// One gated prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub confidence: f64,
    /// Present iff `confidence ≥ threshold`.
    pub jacobian: Option<JacobianMatrix>,
}

/// Builds an untrained model; initialization depends only on `seed`.
pub fn build_combined(input_dim: usize, plan: &HiddenPlan, seed: u64) -> Result<CombinedModel, ModelError> {
    if input_dim != KINEMATIC_WIDTH && input_dim != DYNAMIC_WIDTH {
        return Err(ModelError::BadPlan(format!(
            "input width {input_dim}, expected 24 or 96"
        )));
    }
    plan.validate()?;
    let rep = plan.representation_width();
    let encoder = Network::new(input_dim, &plan.encoder_specs(), &mut substream(seed, INIT_DOMAIN, 0))?;
    let conf_head = Network::new(rep, &plan.conf_head_specs(), &mut substream(seed, INIT_DOMAIN, 1))?;
    let est_head = Network::new(rep, &plan.est_head_specs(), &mut substream(seed, INIT_DOMAIN, 2))?;
    Ok(CombinedModel {
        input_dim,
        encoder,
        conf_head,
        est_head,
        input_scaler: None,
        target_scaler: None,
        threshold: DEFAULT_THRESHOLD,
    })
}

impl CombinedModel {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn set_threshold(&mut self, t: f64) -> Result<(), ModelError> {
        if !(t > 0.0 && t < 1.0) {
            return Err(ModelError::InvalidThreshold(t));
        }
        self.threshold = t;
        Ok(())
    }

    pub fn encoder(&self) -> &Network {
        &self.encoder
    }

    pub fn confidence_head(&self) -> &Network {
        &self.conf_head
    }

    pub fn estimation_head(&self) -> &Network {
        &self.est_head
    }

    pub fn representation_width(&self) -> usize {
        self.encoder.output_dim()
    }

    pub(crate) fn check_width(&self, x: &Tensor) -> Result<(), ModelError> {
        if x.cols() != self.input_dim {
            return Err(ModelError::WidthMismatch {
                expected: self.input_dim,
                got: x.cols(),
            });
        }
        Ok(())
    }

    pub(crate) fn scale_inputs(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        self.check_width(x)?;
        Ok(match &self.input_scaler {
            Some(s) => s.apply(x)?,
            None => x.clone(),
        })
    }

    /// Encoder activations for raw features (inference mode).
    pub fn represent(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        Ok(self.encoder.infer(&self.scale_inputs(x)?)?)
    }

    /// Confidence head output in `(0, 1)` for each row.
    pub fn confidence(&self, x: &Tensor) -> Result<Vec<f64>, ModelError> {
        let rep = self.represent(x)?;
        Ok(self.conf_head.infer(&rep)?.into_data())
    }

    /// Estimation head output mapped back to Jacobian units.
    pub fn estimate(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        let rep = self.represent(x)?;
        let y = self.est_head.infer(&rep)?;
        Ok(match &self.target_scaler {
            Some(s) => s.invert(&y)?,
            None => y,
        })
    }

    /// Gated predictions in row order.
    pub fn predict(&self, x: &Tensor) -> Result<Vec<Prediction>, ModelError> {
        self.predict_at(x, self.threshold)
    }

    pub fn predict_at(&self, x: &Tensor, threshold: f64) -> Result<Vec<Prediction>, ModelError> {
        let rep = self.represent(x)?;
        let conf = self.conf_head.infer(&rep)?.into_data();
        let mut est = self.est_head.infer(&rep)?;
        if let Some(s) = &self.target_scaler {
            est = s.invert(&est)?;
        }
        Ok(gate(&conf, &est, threshold))
    }

    /// Inference-only copy with batch-norm and input scaling folded into
    /// the dense weights.
    pub fn freeze(&self) -> Result<FrozenModel, ModelError> {
        let mut encoder = FrozenNetwork::new(&self.encoder);
        if let Some(s) = &self.input_scaler {
            let (scale, shift) = s.affine();
            encoder = encoder.with_input_affine(&scale, &shift)?;
        }
        Ok(FrozenModel {
            input_dim: self.input_dim,
            encoder,
            conf_head: FrozenNetwork::new(&self.conf_head),
            est_head: FrozenNetwork::new(&self.est_head),
            target_scaler: self.target_scaler.clone(),
            threshold: self.threshold,
        })
    }
}

fn gate(conf: &[f64], est: &Tensor, threshold: f64) -> Vec<Prediction> {
    conf.iter()
        .enumerate()
        .map(|(r, &c)| Prediction {
            confidence: c,
            jacobian: (c >= threshold).then(|| {
                JacobianMatrix::from_row_major(6, est.row(r).to_vec()).expect("estimation head has 36 outputs")
            }),
        })
        .collect()
}

/// Frozen form of a [`CombinedModel`] for batch queries.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenModel {
    input_dim: usize,
    encoder: FrozenNetwork,
    conf_head: FrozenNetwork,
    est_head: FrozenNetwork,
    target_scaler: Option<ScalerState>,
    threshold: f64,
}

impl FrozenModel {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    fn represent(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        if x.cols() != self.input_dim {
            return Err(ModelError::WidthMismatch {
                expected: self.input_dim,
                got: x.cols(),
            });
        }
        Ok(self.encoder.infer(x)?)
    }

    pub fn confidence(&self, x: &Tensor) -> Result<Vec<f64>, ModelError> {
        let rep = self.represent(x)?;
        Ok(self.conf_head.infer(&rep)?.into_data())
    }

    pub fn estimate(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        let y = self.est_head.infer(&self.represent(x)?)?;
        Ok(match &self.target_scaler {
            Some(s) => s.invert(&y)?,
            None => y,
        })
    }

    pub fn predict_at(&self, x: &Tensor, threshold: f64) -> Result<Vec<Prediction>, ModelError> {
        let rep = self.represent(x)?;
        let conf = self.conf_head.infer(&rep)?.into_data();
        let mut est = self.est_head.infer(&rep)?;
        if let Some(s) = &self.target_scaler {
            est = s.invert(&est)?;
        }
        Ok(gate(&conf, &est, threshold))
    }
}

impl ConfidenceModel for FrozenModel {
    fn input_width(&self) -> usize {
        self.input_dim
    }

    fn confidence(&self, features: &Tensor) -> Result<Vec<f64>, WorkspaceError> {
        FrozenModel::confidence(self, features).map_err(|e| WorkspaceError::ShapeMismatch(format!("{e}")))
    }
}

impl ConfidenceModel for CombinedModel {
    fn input_width(&self) -> usize {
        self.input_dim
    }

    fn confidence(&self, features: &Tensor) -> Result<Vec<f64>, WorkspaceError> {
        CombinedModel::confidence(self, features).map_err(|e| WorkspaceError::ShapeMismatch(format!("{e}")))
    }
}
