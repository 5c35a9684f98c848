//! Model files, training history CSV and the wall clock used in training.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use jacobnet_core::model::{Clock, CombinedModel, TrainHistory};

use crate::error::{Error, Result};

/// Milliseconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct StdClock(Instant);

impl StdClock {
    pub fn new() -> Self {
        StdClock(Instant::now())
    }
}

impl Default for StdClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for StdClock {
    fn now_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

pub fn save_model(path: &Path, model: &CombinedModel) -> Result<()> {
    fs::write(path, model.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<CombinedModel> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::MissingInput(path.to_path_buf())),
        Err(e) => return Err(Error::io(path, e)),
    };
    Ok(CombinedModel::from_bytes(&bytes)?)
}

/// `epoch,phase,train_loss,val_loss,val_metric,wall_ms`.
pub fn history_csv(h: &TrainHistory) -> String {
    let mut s = String::from("epoch,phase,train_loss,val_loss,val_metric,wall_ms\n");
    for r in &h.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.3}",
            r.epoch,
            r.phase.name(),
            r.train_loss,
            r.val_loss,
            r.val_metric,
            r.wall_ms
        );
    }
    s
}

pub fn write_history(path: &Path, h: &TrainHistory) -> Result<()> {
    fs::write(path, history_csv(h)).map_err(|e| Error::io(path, e))
}
