use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{shape_err, NnError, Tensor};
use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalerKind {
    /// `(x − mean) / std`, population std.
    Standardize,
    /// Linear map of `[min, max]` onto `[lo, hi]`.
    MinMax { lo: f64, hi: f64 },
}

/// Fitted per-column statistics. Columns with zero spread are flagged in
/// `degenerate` and passed through unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerState {
    pub kind: ScalerKind,
    /// Mean (standardize) or minimum (minmax).
    pub center: Vec<f64>,
    /// Std (standardize) or maximum (minmax).
    pub spread: Vec<f64>,
    pub degenerate: Vec<bool>,
}

/// Columns whose spread is below this fraction of their magnitude (or of 1)
/// are treated as constant; rounding noise would otherwise be amplified.
pub const SPREAD_TOLERANCE: f64 = 1e-9;

pub fn fit_scaler(kind: ScalerKind, data: &Tensor) -> Result<ScalerState, NnError> {
    if let ScalerKind::MinMax { lo, hi } = kind {
        if !(lo < hi) {
            return Err(NnError::InvalidConfig(format!("minmax range [{lo}, {hi}]")));
        }
    }
    let rows = data.rows();
    if rows < 2 {
        return Err(NnError::TooFewRows(rows));
    }
    let cols = data.cols();
    let (center, spread) = match kind {
        ScalerKind::Standardize => {
            let mut mean = vec![0.0; cols];
            for row in data.iter_rows() {
                for (m, v) in mean.iter_mut().zip(row) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= rows as f64);
            let mut var = vec![0.0; cols];
            for row in data.iter_rows() {
                for j in 0..cols {
                    let d = row[j] - mean[j];
                    var[j] += d * d;
                }
            }
            let std = var.iter().map(|v| sqrt(v / rows as f64)).collect();
            (mean, std)
        }
        ScalerKind::MinMax { .. } => {
            let mut lo = vec![f64::INFINITY; cols];
            let mut hi = vec![f64::NEG_INFINITY; cols];
            for row in data.iter_rows() {
                for j in 0..cols {
                    lo[j] = lo[j].min(row[j]);
                    hi[j] = hi[j].max(row[j]);
                }
            }
            (lo, hi)
        }
    };
    let degenerate = center
        .iter()
        .zip(&spread)
        .map(|(&c, &s)| match kind {
            ScalerKind::Standardize => !(s > SPREAD_TOLERANCE * c.abs().max(1.0)) || !s.is_finite(),
            ScalerKind::MinMax { .. } => {
                !(s - c > SPREAD_TOLERANCE * c.abs().max(s.abs()).max(1.0)) || !(s - c).is_finite()
            }
        })
        .collect();
    Ok(ScalerState {
        kind,
        center,
        spread,
        degenerate,
    })
}

impl ScalerState {
    pub fn width(&self) -> usize {
        self.center.len()
    }

    /// `(scale, shift)` with `apply(x) = x·scale + shift` per column.
    pub fn affine(&self) -> (Vec<f64>, Vec<f64>) {
        (0..self.width())
            .map(|j| {
                if self.degenerate[j] {
                    return (1.0, 0.0);
                }
                let (c, s) = (self.center[j], self.spread[j]);
                match self.kind {
                    ScalerKind::Standardize => (1.0 / s, -c / s),
                    ScalerKind::MinMax { lo, hi } => {
                        let k = (hi - lo) / (s - c);
                        (k, lo - c * k)
                    }
                }
            })
            .unzip()
    }

    pub fn degenerate_columns(&self) -> Vec<usize> {
        (0..self.width()).filter(|&j| self.degenerate[j]).collect()
    }

    fn check(&self, cols: usize) -> Result<(), NnError> {
        if cols != self.width() {
            return Err(shape_err(format!("scaler fit on {} columns, got {cols}", self.width())));
        }
        Ok(())
    }

    pub fn apply_row(&self, row: &mut [f64]) -> Result<(), NnError> {
        self.check(row.len())?;
        for (j, v) in row.iter_mut().enumerate() {
            if self.degenerate[j] {
                continue;
            }
            let (c, s) = (self.center[j], self.spread[j]);
            *v = match self.kind {
                ScalerKind::Standardize => (*v - c) / s,
                ScalerKind::MinMax { lo, hi } => lo + (*v - c) * (hi - lo) / (s - c),
            };
        }
        Ok(())
    }

    pub fn invert_row(&self, row: &mut [f64]) -> Result<(), NnError> {
        self.check(row.len())?;
        for (j, v) in row.iter_mut().enumerate() {
            if self.degenerate[j] {
                continue;
            }
            let (c, s) = (self.center[j], self.spread[j]);
            *v = match self.kind {
                ScalerKind::Standardize => *v * s + c,
                ScalerKind::MinMax { lo, hi } => c + (*v - lo) * (s - c) / (hi - lo),
            };
        }
        Ok(())
    }

    pub fn apply(&self, data: &Tensor) -> Result<Tensor, NnError> {
        self.check(data.cols())?;
        let mut out = data.clone();
        for r in 0..out.rows() {
            self.apply_row(out.row_mut(r))?;
        }
        Ok(out)
    }

    pub fn invert(&self, data: &Tensor) -> Result<Tensor, NnError> {
        self.check(data.cols())?;
        let mut out = data.clone();
        for r in 0..out.rows() {
            self.invert_row(out.row_mut(r))?;
        }
        Ok(out)
    }
}
