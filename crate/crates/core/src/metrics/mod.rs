//! Classification and regression scores plus simple closed-form and
//! gradient-descent baselines.

mod baseline;

pub use baseline::{
    baseline_fit_predict, fit_linear, fit_logistic, BaselineKind, LinearModel, LogisticModel, LOGISTIC_ITERATIONS,
    LOGISTIC_LR,
};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

use crate::math::sqrt;
use crate::nn::{Tensor, SPREAD_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no samples")]
    Empty,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("class label {0} is not 0 or 1")]
    NonBinary(f64),
    #[error("normal equations are singular; the design matrix is rank-deficient")]
    SingularSystem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Counts of `predicted` against binary `truth`.
    pub fn from_labels(truth: &[f64], predicted: &[bool]) -> Result<Self, MetricsError> {
        if truth.len() != predicted.len() {
            return Err(MetricsError::ShapeMismatch(format!(
                "{} labels, {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut c = ConfusionCounts::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            let t = if t == 1.0 {
                true
            } else if t == 0.0 {
                false
            } else {
                return Err(MetricsError::NonBinary(t));
            };
            match (t, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationMetrics {
    pub counts: ConfusionCounts,
    /// Fraction of samples whose thresholded prediction matches the label.
    pub jsc: f64,
    /// Set Jaccard of the positive sets, `TP / (TP + FP + FN)`.
    pub jaccard_set: f64,
    pub zero_one: f64,
    pub precision: f64,
    pub recall: f64,
    pub mcc: f64,
    /// MCC was forced to 0 because a marginal count is zero.
    pub mcc_degenerate: bool,
}

impl ClassificationMetrics {
    pub fn from_counts(c: ConfusionCounts) -> Self {
        let n = c.total() as f64;
        let (tp, fp, fneg, tn) = (c.tp as f64, c.fp as f64, c.fn_ as f64, c.tn as f64);
        let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
        let jsc = ratio(tp + tn, n);
        let denom = (tp + fp) * (tp + fneg) * (tn + fp) * (tn + fneg);
        let mcc_degenerate = denom == 0.0;
        let mcc = if mcc_degenerate {
            0.0
        } else {
            ((tp * tn - fp * fneg) / sqrt(denom)).clamp(-1.0, 1.0)
        };
        ClassificationMetrics {
            counts: c,
            jsc,
            jaccard_set: if tp + fp + fneg > 0.0 {
                tp / (tp + fp + fneg)
            } else {
                1.0
            },
            zero_one: ratio(fp + fneg, n),
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fneg),
            mcc,
            mcc_degenerate,
        }
    }
}

/// Scores at or above `threshold` count as positive.
pub fn classification_metrics(
    y: &[f64],
    scores: &[f64],
    threshold: f64,
) -> Result<ClassificationMetrics, MetricsError> {
    if y.is_empty() {
        return Err(MetricsError::Empty);
    }
    let predicted: Vec<bool> = scores.iter().map(|&s| s >= threshold).collect();
    Ok(ClassificationMetrics::from_counts(ConfusionCounts::from_labels(
        y, &predicted,
    )?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionMetrics {
    pub mae: f64,
    pub mse: f64,
    /// Mean over non-constant target columns; NaN if every column is constant.
    pub evs: f64,
    /// Mean over non-constant target columns; NaN if every column is constant.
    pub r2: f64,
    /// Target columns whose spread is within rounding noise of zero,
    /// excluded from EVS and R².
    pub zero_variance: Vec<usize>,
}

/// MAE and MSE averaged over every target column; EVS and R² averaged over
/// columns whose targets vary.
pub fn regression_metrics(y: &Tensor, y_hat: &Tensor) -> Result<RegressionMetrics, MetricsError> {
    if y.shape() != y_hat.shape() {
        return Err(MetricsError::ShapeMismatch(format!(
            "{:?} vs {:?}",
            y.shape(),
            y_hat.shape()
        )));
    }
    let (n, t) = (y.rows(), y.cols());
    if n == 0 || t == 0 {
        return Err(MetricsError::Empty);
    }
    let nf = n as f64;
    let mut mae = 0.0;
    let mut mse = 0.0;
    let mut evs_sum = 0.0;
    let mut r2_sum = 0.0;
    let mut zero_variance = Vec::new();
    for j in 0..t {
        let (mut sy, mut se, mut abs, mut sq) = (0.0, 0.0, 0.0, 0.0);
        for r in 0..n {
            let (a, b) = (y.row(r)[j], y_hat.row(r)[j]);
            let e = a - b;
            sy += a;
            se += e;
            abs += e.abs();
            sq += e * e;
        }
        mae += abs / nf;
        mse += sq / nf;
        let (my, me) = (sy / nf, se / nf);
        let (mut var_y, mut var_e) = (0.0, 0.0);
        for r in 0..n {
            let a = y.row(r)[j];
            let e = a - y_hat.row(r)[j];
            var_y += (a - my) * (a - my);
            var_e += (e - me) * (e - me);
        }
        let scale = my.abs().max(1.0);
        if !(sqrt(var_y / nf) > SPREAD_TOLERANCE * scale) {
            zero_variance.push(j);
            continue;
        }
        evs_sum += 1.0 - var_e / var_y;
        r2_sum += 1.0 - sq / var_y;
    }
    let used = (t - zero_variance.len()) as f64;
    let avg = |s: f64| if used > 0.0 { s / used } else { f64::NAN };
    Ok(RegressionMetrics {
        mae: mae / t as f64,
        mse: mse / t as f64,
        evs: avg(evs_sum),
        r2: avg(r2_sum),
        zero_variance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricRecord {
    Classification(ClassificationMetrics),
    Regression(RegressionMetrics),
}

/// One row of a benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub method: String,
    pub metrics: MetricRecord,
    /// Seconds per sample; NaN when not timed.
    pub avg_time_per_sample: f64,
}
