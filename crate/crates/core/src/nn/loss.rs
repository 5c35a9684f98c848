use alloc::format;
use alloc::vec::Vec;

use super::{shape_err, NnError, Tensor};
use crate::math::ln;

/// Predictions are clipped to `[BCE_CLIP, 1 − BCE_CLIP]` before taking logs.
pub const BCE_CLIP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Binary cross-entropy on probabilities.
    Bce,
    Mse,
}

impl LossKind {
    pub fn value(self, y: &[f64], y_hat: &[f64]) -> Result<f64, NnError> {
        match self {
            LossKind::Bce => loss_bce(y, y_hat),
            LossKind::Mse => loss_mse(y, y_hat),
        }
    }

    /// dL/dŷ for every element.
    pub fn gradient(self, y: &[f64], y_hat: &[f64]) -> Result<Vec<f64>, NnError> {
        check_len(y, y_hat)?;
        let n = y.len() as f64;
        Ok(match self {
            LossKind::Bce => {
                check_binary(y)?;
                y.iter()
                    .zip(y_hat)
                    .map(|(&t, &p)| {
                        let p = clip(p);
                        (p - t) / (p * (1.0 - p)) / n
                    })
                    .collect()
            }
            LossKind::Mse => y.iter().zip(y_hat).map(|(&t, &p)| 2.0 * (p - t) / n).collect(),
        })
    }
}

fn check_len(y: &[f64], y_hat: &[f64]) -> Result<(), NnError> {
    if y.len() != y_hat.len() || y.is_empty() {
        return Err(shape_err(format!("targets {} vs predictions {}", y.len(), y_hat.len())));
    }
    Ok(())
}

fn check_binary(y: &[f64]) -> Result<(), NnError> {
    match y.iter().find(|&&t| t != 0.0 && t != 1.0) {
        Some(t) => Err(NnError::DomainError(format!("binary target {t}"))),
        None => Ok(()),
    }
}

fn clip(p: f64) -> f64 {
    p.clamp(BCE_CLIP, 1.0 - BCE_CLIP)
}

/// Mean two-term binary cross-entropy.
pub fn loss_bce(y: &[f64], y_hat: &[f64]) -> Result<f64, NnError> {
    check_len(y, y_hat)?;
    check_binary(y)?;
    if let Some(p) = y_hat.iter().find(|p| p.is_nan()) {
        return Err(NnError::DomainError(format!("prediction {p}")));
    }
    let s: f64 = y
        .iter()
        .zip(y_hat)
        .map(|(&t, &p)| {
            let p = clip(p);
            -(t * ln(p) + (1.0 - t) * ln(1.0 - p))
        })
        .sum();
    Ok(s / y.len() as f64)
}

pub fn loss_mse(y: &[f64], y_hat: &[f64]) -> Result<f64, NnError> {
    check_len(y, y_hat)?;
    let s: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / y.len() as f64)
}

pub(crate) fn check_same_shape(a: &Tensor, b: &Tensor) -> Result<(), NnError> {
    if a.shape() != b.shape() {
        return Err(shape_err(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bce_examples() {
        assert!(loss_bce(&[1.0], &[1.0]).unwrap() < 1e-11);
        assert!((loss_bce(&[1.0], &[0.5]).unwrap() - core::f64::consts::LN_2).abs() < 1e-15);
        let want = -(0.9f64.ln() + 0.9f64.ln()) / 2.0;
        let got = loss_bce(&[1.0, 0.0], &[0.9, 0.1]).unwrap();
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.105361).abs() < 1e-6);
    }

    #[test]
    fn bce_rejects_soft_targets() {
        assert!(matches!(loss_bce(&[0.5], &[0.5]), Err(NnError::DomainError(_))));
    }

    #[test]
    fn bce_clips_extremes() {
        let l = loss_bce(&[1.0], &[0.0]).unwrap();
        assert!((l - (-BCE_CLIP.ln())).abs() < 1e-9);
    }

    #[test]
    fn mse_examples() {
        assert_eq!(loss_mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(loss_mse(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(loss_mse(&[0.0], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn mse_homogeneous(r in prop::collection::vec(-10.0f64..10.0, 1..20), c in -5.0f64..5.0) {
            let zeros = vec![0.0; r.len()];
            let scaled: Vec<f64> = r.iter().map(|v| v * c).collect();
            let a = loss_mse(&zeros, &r).unwrap();
            let b = loss_mse(&zeros, &scaled).unwrap();
            prop_assert!((b - c * c * a).abs() <= 1e-9 * (1.0 + b.abs()));
        }

        #[test]
        fn bce_minimized_at_target(t in 0u8..2, p in 0.001f64..0.999) {
            let t = t as f64;
            let at = loss_bce(&[t], &[t]).unwrap();
            prop_assert!(at <= loss_bce(&[t], &[p]).unwrap());
        }

        #[test]
        fn mse_nonnegative_zero_iff_equal(a in prop::collection::vec(-5.0f64..5.0, 1..10)) {
            prop_assert_eq!(loss_mse(&a, &a).unwrap(), 0.0);
            let mut b = a.clone();
            b[0] += 0.5;
            prop_assert!(loss_mse(&a, &b).unwrap() > 0.0);
        }
    }
}
