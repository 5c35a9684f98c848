use alloc::vec;
use alloc::vec::Vec;

use super::MetricsError;
use crate::linalg::{cholesky_in_place, cholesky_solve};
use crate::math::{sigmoid, sqrt};
use crate::nn::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineKind {
    Linear,
    Ridge(f64),
    /// Fixed-budget gradient descent on the mean log-loss.
    Logistic,
}

/// Affine model `ŷ = x·W + b` over the non-constant training columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub columns: Vec<usize>,
    /// `columns.len() × targets`, row-major.
    pub weights: Vec<f64>,
    pub intercept: Vec<f64>,
}

fn shape_check(x: &Tensor, y: &Tensor) -> Result<(), MetricsError> {
    if x.rows() != y.rows() {
        return Err(MetricsError::ShapeMismatch(alloc::format!(
            "{} rows vs {} targets",
            x.rows(),
            y.rows()
        )));
    }
    if x.rows() == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

fn column_means(x: &Tensor) -> Vec<f64> {
    let mut m = vec![0.0; x.cols()];
    for row in x.iter_rows() {
        for (a, b) in m.iter_mut().zip(row) {
            *a += b;
        }
    }
    m.iter_mut().for_each(|a| *a /= x.rows() as f64);
    m
}

fn varying_columns(x: &Tensor) -> Vec<usize> {
    (0..x.cols())
        .filter(|&j| {
            let first = x.row(0)[j];
            x.iter_rows().any(|r| r[j] != first)
        })
        .collect()
}

/// Least squares on mean-centered data via the normal equations; `alpha`
/// adds a ridge penalty that leaves the intercept unpenalized.
pub fn fit_linear(x: &Tensor, y: &Tensor, alpha: f64) -> Result<LinearModel, MetricsError> {
    shape_check(x, y)?;
    let columns = varying_columns(x);
    let xs = x.select_cols(&columns);
    let (n, p, t) = (xs.rows(), xs.cols(), y.cols());
    let mx = column_means(&xs);
    let my = column_means(y);
    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p * t];
    for r in 0..n {
        let xr: Vec<f64> = xs.row(r).iter().zip(&mx).map(|(a, m)| a - m).collect();
        let yr = y.row(r);
        for i in 0..p {
            for k in i..p {
                gram[i * p + k] += xr[i] * xr[k];
            }
            for c in 0..t {
                rhs[i * t + c] += xr[i] * (yr[c] - my[c]);
            }
        }
    }
    for i in 0..p {
        for k in 0..i {
            gram[i * p + k] = gram[k * p + i];
        }
        gram[i * p + i] += alpha;
    }
    if p > 0 && !cholesky_in_place(&mut gram, p) {
        return Err(MetricsError::SingularSystem);
    }
    let mut weights = vec![0.0; p * t];
    for c in 0..t {
        let mut b: Vec<f64> = (0..p).map(|i| rhs[i * t + c]).collect();
        cholesky_solve(&gram, p, &mut b);
        for i in 0..p {
            weights[i * t + c] = b[i];
        }
    }
    let intercept = (0..t)
        .map(|c| my[c] - (0..p).map(|i| mx[i] * weights[i * t + c]).sum::<f64>())
        .collect();
    Ok(LinearModel {
        columns,
        weights,
        intercept,
    })
}

impl LinearModel {
    pub fn predict(&self, x: &Tensor) -> Tensor {
        let t = self.intercept.len();
        let mut out = Tensor::zeros(&[x.rows(), t]);
        for r in 0..x.rows() {
            let row = x.row(r);
            let o = out.row_mut(r);
            o.copy_from_slice(&self.intercept);
            for (i, &col) in self.columns.iter().enumerate() {
                for c in 0..t {
                    o[c] += row[col] * self.weights[i * t + c];
                }
            }
        }
        out
    }
}

/// Logistic regression on internally standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub columns: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

pub const LOGISTIC_ITERATIONS: usize = 500;
pub const LOGISTIC_LR: f64 = 0.5;

/// Full-batch gradient descent for a fixed number of iterations from zero.
pub fn fit_logistic(x: &Tensor, y: &[f64], iterations: usize, lr: f64) -> Result<LogisticModel, MetricsError> {
    if x.rows() != y.len() {
        return Err(MetricsError::ShapeMismatch(alloc::format!(
            "{} rows vs {} labels",
            x.rows(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(&v) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(MetricsError::NonBinary(v));
    }
    let columns = varying_columns(x);
    let xs = x.select_cols(&columns);
    let (n, p) = (xs.rows(), xs.cols());
    let mean = column_means(&xs);
    let mut std = vec![0.0; p];
    for row in xs.iter_rows() {
        for j in 0..p {
            std[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
        }
    }
    std.iter_mut().for_each(|s| *s = sqrt(*s / n as f64));
    let z: Vec<f64> = xs
        .data()
        .iter()
        .enumerate()
        .map(|(i, v)| (v - mean[i % p]) / std[i % p])
        .collect();
    let mut w = vec![0.0; p];
    let mut b = 0.0;
    let mut gw = vec![0.0; p];
    for _ in 0..iterations {
        gw.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for r in 0..n {
            let zr = &z[r * p..(r + 1) * p];
            let s: f64 = zr.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b;
            let e = sigmoid(s) - y[r];
            for j in 0..p {
                gw[j] += e * zr[j];
            }
            gb += e;
        }
        for j in 0..p {
            w[j] -= lr * gw[j] / n as f64;
        }
        b -= lr * gb / n as f64;
    }
    Ok(LogisticModel {
        columns,
        mean,
        std,
        weights: w,
        bias: b,
    })
}

impl LogisticModel {
    pub fn predict_proba(&self, x: &Tensor) -> Vec<f64> {
        x.iter_rows()
            .map(|row| {
                let s: f64 = self
                    .columns
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| (row[c] - self.mean[i]) / self.std[i] * self.weights[i])
                    .sum();
                sigmoid(s + self.bias)
            })
            .collect()
    }
}

/// Fits on the training split and predicts the test features. Logistic
/// predictions are probabilities in a single column.
pub fn baseline_fit_predict(
    kind: BaselineKind,
    train_x: &Tensor,
    train_y: &Tensor,
    test_x: &Tensor,
) -> Result<Tensor, MetricsError> {
    match kind {
        BaselineKind::Linear => Ok(fit_linear(train_x, train_y, 0.0)?.predict(test_x)),
        BaselineKind::Ridge(alpha) => Ok(fit_linear(train_x, train_y, alpha)?.predict(test_x)),
        BaselineKind::Logistic => {
            if train_y.cols() != 1 {
                return Err(MetricsError::ShapeMismatch(alloc::format!(
                    "logistic needs one target, got {}",
                    train_y.cols()
                )));
            }
            let m = fit_logistic(train_x, train_y.data(), LOGISTIC_ITERATIONS, LOGISTIC_LR)?;
            let p = m.predict_proba(test_x);
            Tensor::matrix(p.len(), 1, p).map_err(|e| MetricsError::ShapeMismatch(alloc::format!("{e}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{classification_metrics, regression_metrics};
    use crate::rng::stream;
    use rand::Rng;

    fn linear_data(n: usize) -> (Tensor, Tensor) {
        let mut rng = stream(4, 0);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..n {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            xs.extend([a, 7.0, b]);
            ys.extend([2.0 * a - 3.0 * b + 0.5, -a + 4.0]);
        }
        (Tensor::matrix(n, 3, xs).unwrap(), Tensor::matrix(n, 2, ys).unwrap())
    }

    #[test]
    fn linear_recovers_exact_linear_data() {
        let (x, y) = linear_data(50);
        let pred = baseline_fit_predict(BaselineKind::Linear, &x, &y, &x).unwrap();
        let m = regression_metrics(&y, &pred).unwrap();
        assert!((m.r2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tiny_ridge_matches_linear() {
        let (x, y) = linear_data(50);
        let a = baseline_fit_predict(BaselineKind::Linear, &x, &y, &x).unwrap();
        let b = baseline_fit_predict(BaselineKind::Ridge(1e-12), &x, &y, &x).unwrap();
        for (u, v) in a.data().iter().zip(b.data()) {
            assert!((u - v).abs() < 1e-6);
        }
    }

    #[test]
    fn duplicated_column_is_singular() {
        let x = Tensor::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        let y = Tensor::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        assert_eq!(fit_linear(&x, &y, 0.0), Err(MetricsError::SingularSystem));
        assert!(fit_linear(&x, &y, 0.5).is_ok());
    }

    #[test]
    fn logistic_separates_blobs() {
        let mut rng = stream(8, 0);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..200 {
            let cls = (i % 2) as f64;
            let c = if cls == 1.0 { 2.0 } else { -2.0 };
            xs.extend([c + rng.random_range(-1.0..1.0), c + rng.random_range(-1.0..1.0)]);
            ys.push(cls);
        }
        let x = Tensor::matrix(200, 2, xs).unwrap();
        let y = Tensor::matrix(200, 1, ys.clone()).unwrap();
        let p = baseline_fit_predict(BaselineKind::Logistic, &x, &y, &x).unwrap();
        let m = classification_metrics(&ys, p.data(), 0.5).unwrap();
        assert_eq!(m.zero_one, 0.0);
    }
}
