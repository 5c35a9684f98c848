//! `jacobnet` command line: `gen`, `train`, `eval`, `workspace`, `optbench`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::hint::black_box;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use jacobnet_core::dataset::{decode, label_confidence, DatasetFile, SampleOptions, Variant};
use jacobnet_core::kinematics::{fanuc_am120ib_10l, puma560, IkMask, Manipulator, Rotation};
use jacobnet_core::metrics::{
    classification_metrics, fit_linear, fit_logistic, regression_metrics, BenchReport, MetricRecord,
    LOGISTIC_ITERATIONS, LOGISTIC_LR,
};
use jacobnet_core::model::{
    build_combined, estimation_loss, pretrain_encoder, train_cycle, Clock, CombinedModel, HiddenPlan, TrainConfig,
    TrainHistory,
};
use jacobnet_core::nn::{Algo, OptimizerConfig};
use jacobnet_core::rng::substream;
use jacobnet_core::workspace::{
    compare_workspaces, gen_workspace_nn, ConfidenceModel, GridComparison, GridGeometry, WorkspaceError, WorkspaceKind,
    WorkspaceSpec,
};
use jacobnet_core::Tensor;

use crate::bench::{time_method, write_report};
use crate::datasets::{
    nnsample_par, read_metadata, read_split, write_metadata, write_split, ExtraKnobs, Metadata, Split,
};
use crate::error::{Error, Result};
use crate::grid::{gen_workspace_ik_par, write_grid_files};
use crate::training::{load_model, save_model, write_history, StdClock};

#[derive(Debug, Parser)]
#[command(
    name = "jacobnet",
    version,
    about = "Learn manipulator reachability and Jacobians from sampled data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a labelled dataset and write its train/test CSV files.
    Gen(GenArgs),
    /// Pretrain the encoder, then cycle-train both heads.
    Train(TrainArgs),
    /// Benchmark a trained model on the test files.
    Eval(EvalArgs),
    /// Compare IK and model workspaces on a grid.
    Workspace(WorkspaceArgs),
    /// Estimation loss curves for every optimizer.
    Optbench(OptbenchArgs),
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    s.parse()
        .map_err(|e: jacobnet_core::dataset::DatasetError| e.to_string())
}

fn parse_algo(s: &str) -> std::result::Result<Algo, String> {
    s.parse().map_err(|e: jacobnet_core::nn::NnError| e.to_string())
}

fn parse_kind(s: &str) -> std::result::Result<WorkspaceKind, String> {
    s.parse().map_err(|e: WorkspaceError| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlanChoice {
    /// Reduced widths for single-machine runs.
    Desk,
    /// Full-size widths.
    Full,
}

impl PlanChoice {
    pub fn plan(self) -> HiddenPlan {
        match self {
            PlanChoice::Desk => HiddenPlan::desk(),
            PlanChoice::Full => HiddenPlan::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Robot {
    Puma560,
    Fanuc,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_parser = parse_variant)]
    pub variant: Variant,
    #[arg(long)]
    pub num: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub plim: usize,
    #[arg(long, default_value_t = 0.03)]
    pub cutoff: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    /// Random IK starts after the zero configuration.
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0.01)]
    pub test_ratio: f64,
    /// Label reachability by position only.
    #[arg(long)]
    pub position_only: bool,
    #[arg(long)]
    pub parallel: bool,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Recorded in metadata only.
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    /// Recorded in metadata only.
    #[arg(long, default_value_t = 0.8)]
    pub pose_r: f64,
    /// Recorded in metadata only.
    #[arg(long = "type", default_value = "spherical")]
    pub kind: String,
    /// Recorded in metadata only.
    #[arg(long, default_value = "uniform")]
    pub dist: String,
    /// Recorded in metadata only.
    #[arg(long, default_value = "puma560")]
    pub mani: String,
    #[arg(long, env = "JACOBNET_OUT_DIR", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct DataArgs {
    /// Directory holding the dataset CSV files.
    #[arg(long = "data", env = "JACOBNET_OUT_DIR", default_value = ".")]
    pub dir: PathBuf,
    #[arg(long, value_parser = parse_variant, default_value = "conf-kine")]
    pub conf_variant: Variant,
    #[arg(long, value_parser = parse_variant, default_value = "jacob-0")]
    pub jacob_variant: Variant,
    /// Drop dynamics columns so one 24-wide model serves both datasets.
    #[arg(long)]
    pub project_kinematic: bool,
}

impl DataArgs {
    fn load(&self, variant: Variant, split: Split) -> Result<DatasetFile> {
        let f = read_split(&self.dir, variant, split)?;
        if self.project_kinematic {
            Ok(f.project_kinematic()?)
        } else {
            Ok(f)
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Total epochs: pretraining plus cycle phase-epochs.
    #[arg(long, default_value_t = 160)]
    pub epochs: usize,
    #[arg(long, default_value_t = 40)]
    pub pretrain_epochs: usize,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    #[arg(long, value_parser = parse_algo, default_value = "adam")]
    pub optimizer: Algo,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "desk")]
    pub plan: PlanChoice,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0.2)]
    pub validation_split: f64,
    #[arg(long, env = "JACOBNET_OUT_DIR", default_value = ".")]
    pub out: PathBuf,
    /// Model file; defaults to `<out>/model.jnm`.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Append linear, ridge and logistic baselines.
    #[arg(long)]
    pub baselines: bool,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    #[arg(long, env = "JACOBNET_OUT_DIR", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct WorkspaceArgs {
    #[arg(
        long,
        conflicts_with = "constant_confidence",
        required_unless_present = "constant_confidence"
    )]
    pub model: Option<PathBuf>,
    /// Use a stub model that returns this confidence everywhere.
    #[arg(long)]
    pub constant_confidence: Option<f64>,
    #[arg(long, value_enum, default_value = "puma560")]
    pub robot: Robot,
    #[arg(long, value_parser = parse_kind, default_value = "constant-orientation")]
    pub kind: WorkspaceKind,
    /// Fixed roll,pitch,yaw for the constant-orientation kind.
    #[arg(
        long,
        value_delimiter = ',',
        num_args = 3,
        default_value = "0,0,0",
        allow_hyphen_values = true
    )]
    pub rpy: Vec<f64>,
    /// Fixed x,y,z for the orientation kind.
    #[arg(
        long,
        value_delimiter = ',',
        num_args = 3,
        default_value = "0.3,0,0",
        allow_hyphen_values = true
    )]
    pub position: Vec<f64>,
    /// Orientations per cell (per axis for dexterous).
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    #[arg(long, default_value_t = 20)]
    pub resolution: usize,
    #[arg(long, default_value_t = -0.4, allow_hyphen_values = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 0.4, allow_hyphen_values = true)]
    pub hi: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Defaults to the model's stored threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, env = "JACOBNET_OUT_DIR", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OptbenchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 40)]
    pub epochs: usize,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "desk")]
    pub plan: PlanChoice,
    #[arg(long, env = "JACOBNET_OUT_DIR", default_value = ".")]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let usage = <Cli as clap::CommandFactory>::command().render_usage();
            return Err(Error::Usage(format!("{}\n{usage}", e.render().to_string().trim_end())));
        }
    };
    match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Train(a) => cmd_train(&a).map(|_| ()),
        Command::Eval(a) => cmd_eval(&a),
        Command::Workspace(a) => cmd_workspace(&a).map(|_| ()),
        Command::Optbench(a) => cmd_optbench(&a).map(|_| ()),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn cmd_gen(a: &GenArgs) -> Result<()> {
    let opts = SampleOptions {
        variant: a.variant,
        plim: a.plim,
        cutoff: a.cutoff,
        lambda: a.lambda,
        restarts: a.restarts,
        mask: if a.position_only {
            IkMask::PositionOnly
        } else {
            IkMask::Full
        },
        test_ratio: a.test_ratio,
        seed: a.seed,
        parallel: a.parallel,
        ..SampleOptions::default()
    };
    opts.validate().map_err(|e| Error::Usage(e.to_string()))?;
    if a.num < 1 {
        return Err(Error::Usage("--num must be at least 1".into()));
    }
    let t = Instant::now();
    let (train, test) = nnsample_par(a.num, &opts, a.threads)?;
    write_split(&a.out, &train, Split::Train)?;
    write_split(&a.out, &test, Split::Test)?;
    let knobs = ExtraKnobs {
        r: a.r,
        pose_r: a.pose_r,
        kind: a.kind.clone(),
        dist: a.dist.clone(),
        mani: a.mani.clone(),
    };
    write_metadata(&a.out, &Metadata::new(a.num, &opts, &train, &test, knobs))?;
    eprintln!(
        "{}: {} train / {} test rows, positive ratio {:.3}, {:.1} s",
        a.variant,
        train.len(),
        test.len(),
        train.positive_ratio(),
        t.elapsed().as_secs_f64()
    );
    Ok(())
}

/// Training schedule shared by `train` and the acceptance runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub plan: HiddenPlan,
    pub pretrain_epochs: usize,
    pub cycle_epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerConfig,
    pub validation_split: f64,
    pub threshold: f64,
    pub seed: u64,
}

impl Schedule {
    /// Desk-scale defaults.
    pub fn desk() -> Self {
        Schedule {
            plan: HiddenPlan::desk(),
            pretrain_epochs: 40,
            cycle_epochs: 120,
            batch_size: 256,
            optimizer: OptimizerConfig::defaults(Algo::Adam),
            validation_split: 0.2,
            threshold: 0.5,
            seed: 7,
        }
    }

    fn config(&self, epochs: usize) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            epochs,
            validation_split: self.validation_split,
            optimizer: self.optimizer,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }
}

/// Builds a model of the confidence data's width and trains it.
pub fn train_model(
    conf: &DatasetFile,
    jacob: &DatasetFile,
    s: &Schedule,
    clock: &dyn Clock,
) -> Result<(CombinedModel, TrainHistory)> {
    if conf.features.cols() != jacob.features.cols() {
        return Err(Error::Mismatch(format!(
            "confidence features have {} columns but Jacobian features have {}; pass --project-kinematic",
            conf.features.cols(),
            jacob.features.cols()
        )));
    }
    let mut model = build_combined(conf.features.cols(), &s.plan, s.seed)?;
    model.set_threshold(s.threshold)?;
    let mut history = pretrain_encoder(&mut model, jacob, &s.config(s.pretrain_epochs), clock)?;
    if s.cycle_epochs > 0 {
        history.extend(train_cycle(&mut model, conf, jacob, &s.config(s.cycle_epochs), clock)?);
    }
    Ok((model, history))
}

pub fn cmd_train(a: &TrainArgs) -> Result<PathBuf> {
    if a.pretrain_epochs > a.epochs {
        return Err(Error::Usage("--pretrain-epochs cannot exceed --epochs".into()));
    }
    let mut optimizer = OptimizerConfig::defaults(a.optimizer);
    if let Some(lr) = a.lr {
        optimizer = optimizer.with_lr(lr);
    }
    optimizer.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let schedule = Schedule {
        plan: a.plan.plan(),
        pretrain_epochs: a.pretrain_epochs,
        cycle_epochs: a.epochs - a.pretrain_epochs,
        batch_size: a.batch_size,
        optimizer,
        validation_split: a.validation_split,
        threshold: a.threshold,
        seed: a.seed,
    };
    let conf = a.data.load(a.data.conf_variant, Split::Train)?;
    let jacob = a.data.load(a.data.jacob_variant, Split::Train)?;
    let (model, history) = train_model(&conf, &jacob, &schedule, &StdClock::new())?;
    create_dir(&a.out)?;
    let path = a.model.clone().unwrap_or_else(|| a.out.join("model.jnm"));
    save_model(&path, &model)?;
    write_history(&a.out.join("history.csv"), &history)?;
    if let Some(last) = history.records.last() {
        eprintln!("trained {} epochs, last val loss {:.5}", history.len(), last.val_loss);
    }
    Ok(path)
}

/// Confidence rows NN(.25), NN(.5), NN(.75) for a trained model.
pub fn nn_confidence_reports(
    model: &CombinedModel,
    test: &DatasetFile,
    repetitions: usize,
) -> Result<Vec<BenchReport>> {
    let frozen = model.freeze()?;
    let x = &test.features;
    let conf = frozen.confidence(x)?;
    let t = time_method(
        || {
            black_box(frozen.confidence(black_box(x)).ok());
        },
        x.rows(),
        repetitions,
    )?;
    [(0.25, "NN(.25)"), (0.5, "NN(.5)"), (0.75, "NN(.75)")]
        .into_iter()
        .map(|(thr, name)| {
            Ok(BenchReport {
                method: name.into(),
                metrics: MetricRecord::Classification(classification_metrics(test.labels.data(), &conf, thr)?),
                avg_time_per_sample: t,
            })
        })
        .collect()
}

/// The numerical IK existence check on every row of `features`.
pub fn ik_check(features: &Tensor, opts: &SampleOptions, seed: u64) -> Result<Vec<f64>> {
    features
        .iter_rows()
        .enumerate()
        .map(|(i, row)| {
            let (m, pose) = decode(row)?;
            let mut rng = substream(seed, 0xE7A1, i as u64);
            let hit = label_confidence(&m, &pose, opts, &mut rng)?;
            Ok(if hit { 1.0 } else { 0.0 })
        })
        .collect()
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let t = Instant::now();
    let v = f()?;
    Ok((v, t.elapsed().as_secs_f64()))
}

fn finite_rows(f: &DatasetFile) -> Vec<usize> {
    (0..f.len())
        .filter(|&r| f.labels.row(r).iter().all(|v| v.is_finite()))
        .collect()
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let test = a.data.load(a.data.conf_variant, Split::Test)?;
    if test.features.cols() != model.input_dim() {
        return Err(Error::Mismatch(format!(
            "model expects {} features, {} has {}",
            model.input_dim(),
            a.data.conf_variant,
            test.features.cols()
        )));
    }
    let mut conf_rows = nn_confidence_reports(&model, &test, a.repetitions)?;

    let opts = match read_metadata(&a.data.dir, a.data.conf_variant)? {
        Some(m) => m.sample_options()?,
        None => SampleOptions::for_variant(a.data.conf_variant),
    };
    let x = &test.features;
    let ik = ik_check(x, &opts, opts.seed)?;
    let ik_time = time_method(
        || {
            black_box(ik_check(x, &opts, opts.seed).ok());
        },
        x.rows(),
        3,
    )?;
    conf_rows.push(BenchReport {
        method: "IK".into(),
        metrics: MetricRecord::Classification(classification_metrics(test.labels.data(), &ik, 0.5)?),
        avg_time_per_sample: ik_time,
    });

    if a.baselines {
        let train = a.data.load(a.data.conf_variant, Split::Train)?;
        let logistic = fit_logistic(&train.features, train.labels.data(), LOGISTIC_ITERATIONS, LOGISTIC_LR)?;
        let p = logistic.predict_proba(x);
        let t = time_method(
            || drop(black_box(logistic.predict_proba(black_box(x)))),
            x.rows(),
            a.repetitions,
        )?;
        conf_rows.push(BenchReport {
            method: "LogisticReg.".into(),
            metrics: MetricRecord::Classification(classification_metrics(test.labels.data(), &p, 0.5)?),
            avg_time_per_sample: t,
        });
        let ridge = fit_linear(&train.features, &train.labels, 0.5)?;
        let p = ridge.predict(x);
        let t = time_method(|| drop(black_box(ridge.predict(black_box(x)))), x.rows(), a.repetitions)?;
        conf_rows.push(BenchReport {
            method: "RidgeReg.(0.5)".into(),
            metrics: MetricRecord::Classification(classification_metrics(test.labels.data(), p.data(), 0.5)?),
            avg_time_per_sample: t,
        });
    }
    create_dir(&a.out)?;
    write_report(&a.out.join("bench_conf.csv"), &conf_rows)?;

    let jacob_test = match a.data.load(a.data.jacob_variant, Split::Test) {
        Ok(f) => f,
        Err(Error::MissingInput(p)) => {
            eprintln!("skipping estimation benchmark: {} not found", p.display());
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    if jacob_test.features.cols() != model.input_dim() {
        return Err(Error::Mismatch(format!(
            "model expects {} features, {} has {}",
            model.input_dim(),
            a.data.jacob_variant,
            jacob_test.features.cols()
        )));
    }
    let rows = finite_rows(&jacob_test);
    if rows.is_empty() {
        return Err(Error::Mismatch("Jacobian test file has no solvable rows".into()));
    }
    let jx = jacob_test.features.select_rows(&rows);
    let jy = jacob_test.labels.select_rows(&rows);
    let frozen = model.freeze()?;
    let est = frozen.estimate(&jx)?;
    let est_time = time_method(
        || {
            black_box(frozen.estimate(black_box(&jx)).ok());
        },
        jx.rows(),
        a.repetitions,
    )?;
    let mut est_rows = vec![BenchReport {
        method: "NN".into(),
        metrics: MetricRecord::Regression(regression_metrics(&jy, &est)?),
        avg_time_per_sample: est_time,
    }];
    if a.baselines {
        let train = a.data.load(a.data.jacob_variant, Split::Train)?;
        let tr = finite_rows(&train);
        let (tx, ty) = (train.features.select_rows(&tr), train.labels.select_rows(&tr));
        for (alpha, name) in [(0.0, "Lin.Reg."), (0.5, "RidgeReg.")] {
            let fit = fit_linear(&tx, &ty, alpha)?;
            let pred = fit.predict(&jx);
            let t = time_method(
                || drop(black_box(fit.predict(black_box(&jx)))),
                jx.rows(),
                a.repetitions,
            )?;
            est_rows.push(BenchReport {
                method: name.into(),
                metrics: MetricRecord::Regression(regression_metrics(&jy, &pred)?),
                avg_time_per_sample: t,
            });
        }
    }
    write_report(&a.out.join("bench_est.csv"), &est_rows)?;
    Ok(())
}

/// Stub confidence model for sanity runs.
#[derive(Debug, Clone, Copy)]
pub struct ConstantModel(pub f64);

impl ConfidenceModel for ConstantModel {
    fn input_width(&self) -> usize {
        jacobnet_core::dataset::KINEMATIC_WIDTH
    }
    fn confidence(&self, features: &Tensor) -> std::result::Result<Vec<f64>, WorkspaceError> {
        Ok(vec![self.0; features.rows()])
    }
}

pub fn cmd_workspace(a: &WorkspaceArgs) -> Result<GridComparison> {
    let m: Manipulator = match a.robot {
        Robot::Puma560 => puma560(),
        Robot::Fanuc => fanuc_am120ib_10l(),
    };
    let spec = match a.kind {
        WorkspaceKind::Reachable => WorkspaceSpec {
            orientation_samples: a.samples,
            ..WorkspaceSpec::reachable()
        },
        WorkspaceKind::ConstantOrientation => {
            WorkspaceSpec::constant_orientation(Rotation::from_rpy(a.rpy[0], a.rpy[1], a.rpy[2]))
        }
        WorkspaceKind::TotalOrientation => {
            WorkspaceSpec::total_orientation([(0.0, std::f64::consts::TAU); 3], a.samples)
        }
        WorkspaceKind::Dexterous => WorkspaceSpec::dexterous(a.samples),
        WorkspaceKind::Orientation => WorkspaceSpec::orientation([a.position[0], a.position[1], a.position[2]]),
    }
    .with_seed(a.seed);
    let geom = if a.kind == WorkspaceKind::Orientation {
        GridGeometry::cube(0.0, std::f64::consts::TAU, a.resolution)
    } else {
        GridGeometry::cube(a.lo, a.hi, a.resolution)
    };
    geom.validate().map_err(|e| Error::Usage(e.to_string()))?;
    spec.validate().map_err(|e| Error::Usage(e.to_string()))?;

    let (frozen, stub) = match (&a.model, a.constant_confidence) {
        (Some(p), _) => {
            let model = load_model(p)?;
            (Some(model.freeze()?), None)
        }
        (None, Some(c)) => (None, Some(ConstantModel(c))),
        (None, None) => return Err(Error::Usage("pass --model or --constant-confidence".into())),
    };
    let nn: &dyn ConfidenceModel = match (&frozen, &stub) {
        (Some(f), _) => f,
        (_, Some(s)) => s,
        _ => unreachable!(),
    };
    let threshold = a.threshold.or(frozen.as_ref().map(|f| f.threshold())).unwrap_or(0.5);

    let (ik_grid, ik_secs) = timed(|| gen_workspace_ik_par(&m, &spec, &geom, a.threads))?;
    let (nn_grid, nn_secs) = timed(|| Ok(gen_workspace_nn(nn, &m, &spec, &geom, threshold)?))?;
    let cmp = compare_workspaces(&ik_grid, &nn_grid)?;
    create_dir(&a.out)?;
    write_grid_files(&a.out, "ws_ik", &ik_grid)?;
    write_grid_files(&a.out, "ws_nn", &nn_grid)?;
    let mut report = String::from("kind,iou,true_pos,false_pos,false_neg,true_neg,ik_seconds,nn_seconds\n");
    let _ = writeln!(
        report,
        "{},{},{},{},{},{},{},{}",
        a.kind, cmp.iou, cmp.true_pos, cmp.false_pos, cmp.false_neg, cmp.true_neg, ik_secs, nn_secs
    );
    let path = a.out.join("ws_report.csv");
    fs::write(&path, report).map_err(|e| Error::io(&path, e))?;
    eprintln!(
        "{}: IoU {:.4} ({} IK cells, {} NN cells)",
        a.kind,
        cmp.iou,
        ik_grid.occupied(),
        nn_grid.occupied()
    );
    Ok(cmp)
}

/// One point of an optimizer loss curve. Epoch 0 is the untrained model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub wall_ms: f64,
}

/// Estimation loss curves of encoder pretraining, one per optimizer, each
/// from the same initial weights and split.
pub fn optbench(
    jacob: &DatasetFile,
    plan: &HiddenPlan,
    epochs: usize,
    batch_size: usize,
    seed: u64,
    clock: &dyn Clock,
) -> Result<Vec<(Algo, Vec<CurvePoint>)>> {
    let mut out = Vec::new();
    for algo in Algo::ALL {
        let cfg = TrainConfig {
            batch_size,
            epochs,
            optimizer: OptimizerConfig::defaults(algo),
            seed,
            ..TrainConfig::default()
        };
        let mut model = build_combined(jacob.features.cols(), plan, seed)?;
        jacobnet_core::model::fit_scalers(&mut model, jacob, &cfg)?;
        let (t0, v0) = estimation_loss(&model, jacob, &cfg)?;
        let mut curve = vec![CurvePoint {
            epoch: 0,
            train_loss: t0,
            val_loss: v0,
            wall_ms: 0.0,
        }];
        let h = pretrain_encoder(&mut model, jacob, &cfg, clock)?;
        curve.extend(h.records.iter().map(|r| CurvePoint {
            epoch: r.epoch,
            train_loss: r.train_loss,
            val_loss: r.val_loss,
            wall_ms: r.wall_ms,
        }));
        eprintln!(
            "{algo}: val loss {v0:.5} -> {:.5}",
            curve.last().map_or(v0, |c| c.val_loss)
        );
        out.push((algo, curve));
    }
    Ok(out)
}

pub fn cmd_optbench(a: &OptbenchArgs) -> Result<Vec<(Algo, Vec<CurvePoint>)>> {
    if a.epochs < 1 {
        return Err(Error::Usage("--epochs must be at least 1".into()));
    }
    let jacob = a.data.load(a.data.jacob_variant, Split::Train)?;
    let curves = optbench(&jacob, &a.plan.plan(), a.epochs, a.batch_size, a.seed, &StdClock::new())?;
    create_dir(&a.out)?;
    let mut summary = String::from("optimizer,initial_val_loss,final_train_loss,final_val_loss\n");
    for (algo, curve) in &curves {
        let mut s = String::from("epoch,train_loss,val_loss,wall_ms\n");
        for p in curve {
            let _ = writeln!(s, "{},{},{},{:.3}", p.epoch, p.train_loss, p.val_loss, p.wall_ms);
        }
        let path = a.out.join(format!("optbench_{}.csv", algo.name()));
        fs::write(&path, s).map_err(|e| Error::io(&path, e))?;
        let (first, last) = (curve[0], curve[curve.len() - 1]);
        let _ = writeln!(
            summary,
            "{},{},{},{}",
            algo.name(),
            first.val_loss,
            last.train_loss,
            last.val_loss
        );
    }
    let path = a.out.join("optbench_summary.csv");
    fs::write(&path, summary).map_err(|e| Error::io(&path, e))?;
    Ok(curves)
}
