//! Wall-clock timing and benchmark report files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use jacobnet_core::metrics::{BenchReport, MetricRecord};

use crate::error::{Error, Result};

/// Seconds per sample of `f`, which processes `samples` samples per call.
///
/// One warm-up call is discarded, then each of `repetitions` calls gives a
/// per-sample mean; the median of those means is returned.
pub fn time_method<F: FnMut()>(mut f: F, samples: usize, repetitions: usize) -> Result<f64> {
    if repetitions < 3 {
        return Err(Error::Usage(format!(
            "timing needs at least 3 repetitions, got {repetitions}"
        )));
    }
    if samples == 0 {
        return Err(Error::Usage("timing needs at least one sample".into()));
    }
    f();
    let mut means: Vec<f64> = (0..repetitions)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64() / samples as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let mid = means.len() / 2;
    Ok(if means.len() % 2 == 1 {
        means[mid]
    } else {
        0.5 * (means[mid - 1] + means[mid])
    })
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Classification rows as `method,jsc,zero_one,precision,recall,mcc,jaccard_set,avg_time_s`,
/// regression rows as `method,mae,mse,evs,r2,avg_time_s`. Every report in one
/// file must be of the same kind.
pub fn report_csv(reports: &[BenchReport]) -> Result<String> {
    let mut s = String::new();
    let classification = matches!(
        reports.first().map(|r| &r.metrics),
        Some(MetricRecord::Classification(_))
    );
    s.push_str(if classification {
        "method,jsc,zero_one,precision,recall,mcc,jaccard_set,avg_time_s\n"
    } else {
        "method,mae,mse,evs,r2,avg_time_s\n"
    });
    for r in reports {
        let t = fmt(r.avg_time_per_sample);
        match (&r.metrics, classification) {
            (MetricRecord::Classification(c), true) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{t}",
                    r.method, c.jsc, c.zero_one, c.precision, c.recall, c.mcc, c.jaccard_set
                );
            }
            (MetricRecord::Regression(m), false) => {
                let _ = writeln!(s, "{},{},{},{},{},{t}", r.method, m.mae, m.mse, fmt(m.evs), fmt(m.r2));
            }
            _ => {
                return Err(Error::Mismatch(
                    "classification and regression rows in one report".into(),
                ))
            }
        }
    }
    Ok(s)
}

pub fn write_report(path: &Path, reports: &[BenchReport]) -> Result<()> {
    let text = report_csv(reports)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
