//! Dataset files on disk: release file names, the JSON metadata sidecar and
//! the parallel sampling driver.

use std::fs;
use std::path::{Path, PathBuf};

use jacobnet_core::dataset::{
    sample_row, split_rows, test_count, DatasetError, DatasetFile, SampleOptions, Variant, KINEMATIC_WIDTH,
};
use jacobnet_core::kinematics::{IkMask, PUMA560_A, PUMA560_ALPHA, PUMA560_D};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csvio::{read_matrix_file, write_matrix_file};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

fn name_parts(variant: Variant) -> (&'static str, &'static str) {
    match variant {
        Variant::ConfKine => ("conf", ""),
        Variant::ConfDyna => ("conf", "_dyna"),
        Variant::JacobE => ("jacob", ""),
        Variant::Jacob0 => ("jacob0", ""),
    }
}

/// `conf_feature_train.csv`, `conf_label_dyna_test.csv`, `jacob0_feature_train.csv`, ...
pub fn feature_file_name(variant: Variant, split: Split) -> String {
    let (p, s) = name_parts(variant);
    format!("{p}_feature{s}_{}.csv", split.name())
}

pub fn label_file_name(variant: Variant, split: Split) -> String {
    let (p, s) = name_parts(variant);
    format!("{p}_label{s}_{}.csv", split.name())
}

pub fn meta_file_name(variant: Variant) -> String {
    let (p, s) = name_parts(variant);
    format!("{p}{s}_meta.json")
}

/// Sampling knobs that are recorded but do not change sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraKnobs {
    pub r: f64,
    pub pose_r: f64,
    #[serde(rename = "type")]
    pub kind: String,
    pub dist: String,
    pub mani: String,
}

impl Default for ExtraKnobs {
    fn default() -> Self {
        ExtraKnobs {
            r: 0.5,
            pose_r: 0.8,
            kind: "spherical".into(),
            dist: "uniform".into(),
            mani: "puma560".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub d: [f64; 6],
    pub a: [f64; 6],
    pub alpha: [f64; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub variant: String,
    pub num: usize,
    pub seed: u64,
    pub train_rows: usize,
    pub test_rows: usize,
    pub feature_width: usize,
    pub target_width: usize,
    pub pose_position_range: (f64, f64),
    pub dh_free_range: (f64, f64),
    pub plim: usize,
    pub cutoff: f64,
    pub lambda: f64,
    pub restarts: usize,
    pub position_only: bool,
    pub test_ratio: f64,
    pub positive_ratio_train: f64,
    pub positive_ratio_test: f64,
    pub template: Template,
    pub knobs: ExtraKnobs,
}

impl Metadata {
    pub fn new(num: usize, opts: &SampleOptions, train: &DatasetFile, test: &DatasetFile, knobs: ExtraKnobs) -> Self {
        Metadata {
            variant: opts.variant.name().into(),
            num,
            seed: opts.seed,
            train_rows: train.len(),
            test_rows: test.len(),
            feature_width: opts.variant.feature_width(),
            target_width: opts.variant.target_width(),
            pose_position_range: opts.pose_position_range,
            dh_free_range: opts.dh_free_range,
            plim: opts.plim,
            cutoff: opts.cutoff,
            lambda: opts.lambda,
            restarts: opts.restarts,
            position_only: opts.mask == IkMask::PositionOnly,
            test_ratio: opts.test_ratio,
            positive_ratio_train: train.positive_ratio(),
            positive_ratio_test: test.positive_ratio(),
            template: Template {
                d: PUMA560_D,
                a: PUMA560_A,
                alpha: PUMA560_ALPHA,
            },
            knobs,
        }
    }

    /// Sampling options the files were generated with.
    pub fn sample_options(&self) -> Result<SampleOptions> {
        Ok(SampleOptions {
            variant: self.variant.parse()?,
            pose_position_range: self.pose_position_range,
            dh_free_range: self.dh_free_range,
            plim: self.plim,
            cutoff: self.cutoff,
            lambda: self.lambda,
            restarts: self.restarts,
            mask: if self.position_only {
                IkMask::PositionOnly
            } else {
                IkMask::Full
            },
            test_ratio: self.test_ratio,
            seed: self.seed,
            ..SampleOptions::default()
        })
    }
}

/// [`jacobnet_core::dataset::nnsample`] with rows drawn on a rayon pool when
/// `opts.parallel` is set. Output does not depend on the thread count.
pub fn nnsample_par(num: usize, opts: &SampleOptions, threads: Option<usize>) -> Result<(DatasetFile, DatasetFile)> {
    if num < 1 {
        return Err(DatasetError::InvalidOptions("num must be at least 1").into());
    }
    opts.validate()?;
    if !opts.parallel {
        return Ok(jacobnet_core::dataset::nnsample(num, opts)?);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    let rows = pool.install(|| {
        (0..num as u64)
            .into_par_iter()
            .map(|i| sample_row(i, opts))
            .collect::<std::result::Result<Vec<_>, _>>()
    })?;
    Ok(split_rows(rows, opts.variant, opts.test_ratio)?)
}

/// Expected (train, test) row counts for `num` samples.
pub fn split_counts(num: usize, test_ratio: f64) -> (usize, usize) {
    let t = test_count(num, test_ratio);
    (num - t, t)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_split(dir: &Path, file: &DatasetFile, split: Split) -> Result<()> {
    ensure_dir(dir)?;
    write_matrix_file(&dir.join(feature_file_name(file.variant, split)), &file.features)?;
    write_matrix_file(&dir.join(label_file_name(file.variant, split)), &file.labels)
}

pub fn write_metadata(dir: &Path, meta: &Metadata) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let variant: Variant = meta.variant.parse()?;
    let path = dir.join(meta_file_name(variant));
    let text = serde_json::to_string_pretty(meta).map_err(|e| Error::Json {
        path: path.clone(),
        source: e,
    })?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_metadata(dir: &Path, variant: Variant) -> Result<Option<Metadata>> {
    let path = dir.join(meta_file_name(variant));
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(&path, e)),
    };
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Error::Json { path, source: e })
}

/// Feature and label files of a variant and split. Features may be the
/// variant's full width or the 24-column kinematic projection.
pub fn read_split(dir: &Path, variant: Variant, split: Split) -> Result<DatasetFile> {
    let fpath = dir.join(feature_file_name(variant, split));
    let lpath = dir.join(label_file_name(variant, split));
    let features = read_matrix_file(&fpath, None)?;
    if features.rows() > 0 && features.cols() != variant.feature_width() && features.cols() != KINEMATIC_WIDTH {
        return Err(Error::MalformedRow {
            path: fpath,
            row: 0,
            reason: format!("{} columns, expected {}", features.cols(), variant.feature_width()),
        });
    }
    let labels = read_matrix_file(&lpath, Some(variant.target_width()))?;
    if labels.rows() != features.rows() {
        return Err(Error::Mismatch(format!(
            "{} has {} rows but {} has {}",
            fpath.display(),
            features.rows(),
            lpath.display(),
            labels.rows()
        )));
    }
    if features.rows() == 0 {
        return Err(Error::Mismatch(format!("{} is empty", fpath.display())));
    }
    Ok(DatasetFile::new(variant, features, labels)?)
}
