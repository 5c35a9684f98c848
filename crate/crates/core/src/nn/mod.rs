//! Dense neural-network engine: layers with hand-written backward passes,
//! losses, optimizers, gradient checking and feature scaling. All math is
//! 64-bit and single-threaded, so results are bitwise reproducible.

mod frozen;
mod gradcheck;
mod layer;
mod loss;
mod network;
mod optim;
mod scaler;
mod tensor;

pub use frozen::FrozenNetwork;
pub use gradcheck::grad_check;
pub use layer::{BatchNorm, Dense, Dropout, Layer, LayerSpec, Mode, PRelu, Sigmoid};
pub use loss::{loss_bce, loss_mse, LossKind, BCE_CLIP};
pub use network::Network;
pub use optim::{optimizer_step, Algo, Optimizer, OptimizerConfig, SlotState};
pub use scaler::{fit_scaler, ScalerKind, ScalerState, SPREAD_TOLERANCE};
pub use tensor::Tensor;

use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("value outside the loss domain: {0}")]
    DomainError(String),
    #[error("unknown optimizer `{0}`")]
    UnknownAlgo(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("backward called without a forward cache")]
    MissingCache,
    #[error("scaler needs at least two rows, got {0}")]
    TooFewRows(usize),
}

pub(crate) fn shape_err(msg: impl Into<String>) -> NnError {
    NnError::ShapeMismatch(msg.into())
}
