use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{CombinedModel, ModelError, JACOBIAN_WIDTH};
use crate::dataset::DatasetFile;
use crate::metrics::regression_metrics;
use crate::nn::{
    fit_scaler, loss_bce, loss_mse, LossKind, Mode, Network, Optimizer, OptimizerConfig, ScalerKind, Tensor,
};
use crate::rng::substream;

/// Millisecond wall clock supplied by the caller (the core has no clock).
pub trait Clock {
    fn now_ms(&self) -> f64;
}

/// Clock that always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ms(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Pretrain,
    Confidence,
    Estimation,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Pretrain => "pretrain",
            Phase::Confidence => "conf",
            Phase::Estimation => "est",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based, consecutive within a history.
    pub epoch: usize,
    pub phase: Phase,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Validation accuracy at the model threshold (confidence) or R² on
    /// scaled targets (estimation).
    pub val_metric: f64,
    pub wall_ms: f64,
    /// [`Network::checksum`] of the encoder after the epoch.
    pub encoder_checksum: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn phases(&self) -> Vec<Phase> {
        self.records.iter().map(|r| r.phase).collect()
    }

    /// Appends `other`, renumbering its epochs to follow this history.
    pub fn extend(&mut self, other: TrainHistory) {
        let base = self.records.len();
        for (i, mut r) in other.records.into_iter().enumerate() {
            r.epoch = base + i + 1;
            self.records.push(r);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Phase-epochs to run in one training call.
    pub epochs: usize,
    /// Fraction of rows (taken from the end) held out for validation.
    pub validation_split: f64,
    pub optimizer: OptimizerConfig,
    pub conf_passes: usize,
    pub est_passes: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 4096,
            epochs: 25,
            validation_split: 0.2,
            optimizer: OptimizerConfig::defaults(crate::nn::Algo::Adam),
            conf_passes: 2,
            est_passes: 1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::BadPlan(m.into()));
        if self.batch_size < 2 {
            return bad("batch size must be at least 2");
        }
        if !(self.validation_split > 0.0 && self.validation_split < 1.0) {
            return bad("validation split must lie in (0, 1)");
        }
        if self.conf_passes + self.est_passes == 0 {
            return bad("a cycle needs at least one pass");
        }
        self.optimizer.validate()?;
        Ok(())
    }
}

const SHUFFLE_DOMAIN: u64 = 0x5e1f;
const DROPOUT_DOMAIN: u64 = 0xd209;
const PRETRAIN_STREAM: u64 = 0;
const CYCLE_STREAM: u64 = 1 << 32;

/// Training and validation partitions with scaled features.
struct Split {
    train_x: Tensor,
    train_y: Tensor,
    val_x: Tensor,
    val_y: Tensor,
}

fn usable_rows(data: &DatasetFile, regression: bool) -> Vec<usize> {
    (0..data.len())
        .filter(|&r| !regression || data.labels.row(r).iter().all(|v| v.is_finite()))
        .collect()
}

fn check_dataset(model: &CombinedModel, data: &DatasetFile, regression: bool) -> Result<(), ModelError> {
    model.check_width(&data.features)?;
    let want = if regression { JACOBIAN_WIDTH } else { 1 };
    if data.labels.cols() != want {
        return Err(ModelError::WidthMismatch {
            expected: want,
            got: data.labels.cols(),
        });
    }
    Ok(())
}

fn split(model: &CombinedModel, data: &DatasetFile, regression: bool, cfg: &TrainConfig) -> Result<Split, ModelError> {
    let rows = usable_rows(data, regression);
    let n_val = crate::math::round(rows.len() as f64 * cfg.validation_split) as usize;
    if rows.len() < n_val + 2 || n_val == 0 {
        return Err(ModelError::EmptyDataset);
    }
    let cut = rows.len() - n_val;
    let x = model.scale_inputs(&data.features.select_rows(&rows))?;
    let mut y = data.labels.select_rows(&rows);
    if regression {
        if let Some(s) = &model.target_scaler {
            y = s.apply(&y)?;
        }
    }
    Ok(Split {
        train_x: x.slice_rows(0..cut),
        train_y: y.slice_rows(0..cut),
        val_x: x.slice_rows(cut..rows.len()),
        val_y: y.slice_rows(cut..rows.len()),
    })
}

/// Fits any missing scalers on the training portion of a Jacobian dataset:
/// standardized inputs and targets min-max scaled to `[−1, 1]`. Sentinel
/// rows are ignored.
pub fn fit_scalers(model: &mut CombinedModel, jacob: &DatasetFile, cfg: &TrainConfig) -> Result<(), ModelError> {
    check_dataset(model, jacob, true)?;
    let rows = usable_rows(jacob, true);
    let n_val = crate::math::round(rows.len() as f64 * cfg.validation_split) as usize;
    if rows.len() < n_val + 2 {
        return Err(ModelError::EmptyDataset);
    }
    let train = &rows[..rows.len() - n_val];
    if model.input_scaler.is_none() {
        model.input_scaler = Some(fit_scaler(ScalerKind::Standardize, &jacob.features.select_rows(train))?);
    }
    if model.target_scaler.is_none() {
        model.target_scaler = Some(fit_scaler(
            ScalerKind::MinMax { lo: -1.0, hi: 1.0 },
            &jacob.labels.select_rows(train),
        )?);
    }
    Ok(())
}

fn fit_input_scaler(model: &mut CombinedModel, data: &DatasetFile, cfg: &TrainConfig) -> Result<(), ModelError> {
    if model.input_scaler.is_some() {
        return Ok(());
    }
    let n_val = crate::math::round(data.len() as f64 * cfg.validation_split) as usize;
    if data.len() < n_val + 2 {
        return Err(ModelError::EmptyDataset);
    }
    let train = data.features.slice_rows(0..data.len() - n_val);
    model.input_scaler = Some(fit_scaler(ScalerKind::Standardize, &train)?);
    Ok(())
}

fn batches(n: usize, batch: usize, seed: u64, stream_index: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut substream(seed, SHUFFLE_DOMAIN, stream_index));
    idx.chunks(batch).filter(|c| c.len() >= 2).map(|c| c.to_vec()).collect()
}

fn infer_batched(net: &Network, x: &Tensor, batch: usize) -> Result<Tensor, ModelError> {
    let mut out = Vec::new();
    let mut cols = net.output_dim();
    let mut start = 0;
    while start < x.rows() {
        let end = (start + batch).min(x.rows());
        let y = net.infer(&x.slice_rows(start..end))?;
        cols = y.cols();
        out.extend_from_slice(y.data());
        start = end;
    }
    Ok(Tensor::matrix(x.rows(), cols, out)?)
}

/// Estimation loss (MSE on scaled targets) of the current model on the
/// training and validation partitions, without any update.
pub fn estimation_loss(
    model: &CombinedModel,
    jacob: &DatasetFile,
    cfg: &TrainConfig,
) -> Result<(f64, f64), ModelError> {
    check_dataset(model, jacob, true)?;
    let s = split(model, jacob, true, cfg)?;
    let eval = |x: &Tensor, y: &Tensor| -> Result<f64, ModelError> {
        let rep = infer_batched(&model.encoder, x, cfg.batch_size)?;
        let out = infer_batched(&model.est_head, &rep, cfg.batch_size)?;
        Ok(loss_mse(y.data(), out.data())?)
    };
    Ok((eval(&s.train_x, &s.train_y)?, eval(&s.val_x, &s.val_y)?))
}

struct Optimizers {
    encoder: Optimizer,
    conf: Optimizer,
    est: Optimizer,
}

impl Optimizers {
    fn new(cfg: &OptimizerConfig) -> Result<Self, ModelError> {
        Ok(Optimizers {
            encoder: Optimizer::new(*cfg)?,
            conf: Optimizer::new(*cfg)?,
            est: Optimizer::new(*cfg)?,
        })
    }
}

fn estimation_epoch(
    model: &mut CombinedModel,
    opt: &mut Optimizers,
    s: &Split,
    cfg: &TrainConfig,
    stream_index: u64,
) -> Result<(f64, f64, f64), ModelError> {
    let mut rng = substream(cfg.seed, DROPOUT_DOMAIN, stream_index);
    let mut total = 0.0;
    let mut count = 0usize;
    for b in batches(s.train_x.rows(), cfg.batch_size, cfg.seed, stream_index) {
        let xb = s.train_x.select_rows(&b);
        let yb = s.train_y.select_rows(&b);
        let rep = model.encoder.forward(&xb, Mode::Train, &mut rng)?;
        let out = model.est_head.forward(&rep, Mode::Train, &mut rng)?;
        total += loss_mse(yb.data(), out.data())? * b.len() as f64;
        count += b.len();
        let drep = model.est_head.backward(&out, &yb, LossKind::Mse)?;
        model.encoder.backward_from(drep)?;
        opt.est.step(&mut model.est_head)?;
        opt.encoder.step(&mut model.encoder)?;
    }
    model.encoder.clear_caches();
    model.est_head.clear_caches();
    let rep = infer_batched(&model.encoder, &s.val_x, cfg.batch_size)?;
    let out = infer_batched(&model.est_head, &rep, cfg.batch_size)?;
    let val = loss_mse(s.val_y.data(), out.data())?;
    let r2 = regression_metrics(&s.val_y, &out).map(|m| m.r2).unwrap_or(f64::NAN);
    Ok((total / count.max(1) as f64, val, r2))
}

/// One confidence epoch with the encoder frozen: its representation is
/// computed once in inference mode and only the confidence head is updated.
fn confidence_epoch(
    model: &mut CombinedModel,
    opt: &mut Optimizers,
    s: &Split,
    cfg: &TrainConfig,
    stream_index: u64,
) -> Result<(f64, f64, f64), ModelError> {
    let mut rng = substream(cfg.seed, DROPOUT_DOMAIN, stream_index);
    let rep = infer_batched(&model.encoder, &s.train_x, cfg.batch_size)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for b in batches(rep.rows(), cfg.batch_size, cfg.seed, stream_index) {
        let rb = rep.select_rows(&b);
        let yb = s.train_y.select_rows(&b);
        let out = model.conf_head.forward(&rb, Mode::Train, &mut rng)?;
        total += loss_bce(yb.data(), out.data())? * b.len() as f64;
        count += b.len();
        model.conf_head.backward(&out, &yb, LossKind::Bce)?;
        opt.conf.step(&mut model.conf_head)?;
    }
    model.conf_head.clear_caches();
    let vrep = infer_batched(&model.encoder, &s.val_x, cfg.batch_size)?;
    let out = infer_batched(&model.conf_head, &vrep, cfg.batch_size)?;
    let val = loss_bce(s.val_y.data(), out.data())?;
    let hits = out
        .data()
        .iter()
        .zip(s.val_y.data())
        .filter(|(p, y)| (**p >= model.threshold) == (**y == 1.0))
        .count();
    Ok((total / count.max(1) as f64, val, hits as f64 / out.rows() as f64))
}

/// Trains encoder and estimation head jointly on a Jacobian dataset
/// (sentinel rows dropped) for `cfg.epochs` epochs.
pub fn pretrain_encoder(
    model: &mut CombinedModel,
    jacob: &DatasetFile,
    cfg: &TrainConfig,
    clock: &dyn Clock,
) -> Result<TrainHistory, ModelError> {
    cfg.validate()?;
    fit_scalers(model, jacob, cfg)?;
    let s = split(model, jacob, true, cfg)?;
    let mut opt = Optimizers::new(&cfg.optimizer)?;
    let mut history = TrainHistory::default();
    for e in 0..cfg.epochs {
        let t0 = clock.now_ms();
        let (train_loss, val_loss, val_metric) =
            estimation_epoch(model, &mut opt, &s, cfg, PRETRAIN_STREAM + e as u64)?;
        history.records.push(EpochRecord {
            epoch: e + 1,
            phase: Phase::Pretrain,
            train_loss,
            val_loss,
            val_metric,
            wall_ms: clock.now_ms() - t0,
            encoder_checksum: model.encoder.checksum(),
        });
    }
    Ok(history)
}

/// Alternates `cfg.conf_passes` confidence epochs (encoder frozen, BCE) with
/// `cfg.est_passes` estimation epochs (encoder trained, MSE) until
/// `cfg.epochs` phase-epochs have run.
pub fn train_cycle(
    model: &mut CombinedModel,
    conf: &DatasetFile,
    jacob: &DatasetFile,
    cfg: &TrainConfig,
    clock: &dyn Clock,
) -> Result<TrainHistory, ModelError> {
    cfg.validate()?;
    check_dataset(model, conf, false)?;
    check_dataset(model, jacob, true)?;
    if cfg.est_passes > 0 {
        fit_scalers(model, jacob, cfg)?;
    } else {
        fit_input_scaler(model, conf, cfg)?;
    }
    let cs = split(model, conf, false, cfg)?;
    let js = if cfg.est_passes > 0 {
        Some(split(model, jacob, true, cfg)?)
    } else {
        None
    };
    let mut opt = Optimizers::new(&cfg.optimizer)?;
    let period = cfg.conf_passes + cfg.est_passes;
    let mut history = TrainHistory::default();
    for e in 0..cfg.epochs {
        let t0 = clock.now_ms();
        let stream_index = CYCLE_STREAM + e as u64;
        let (phase, (train_loss, val_loss, val_metric)) = if e % period < cfg.conf_passes {
            (
                Phase::Confidence,
                confidence_epoch(model, &mut opt, &cs, cfg, stream_index)?,
            )
        } else {
            let js = js.as_ref().expect("estimation split exists when est_passes > 0");
            (
                Phase::Estimation,
                estimation_epoch(model, &mut opt, js, cfg, stream_index)?,
            )
        };
        history.records.push(EpochRecord {
            epoch: e + 1,
            phase,
            train_loss,
            val_loss,
            val_metric,
            wall_ms: clock.now_ms() - t0,
            encoder_checksum: model.encoder.checksum(),
        });
    }
    Ok(history)
}
