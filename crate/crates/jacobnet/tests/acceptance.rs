//! Acceptance run: one PASS/FAIL line per criterion. Heavy; runs the
//! desk-scale generation and training once and shares the results.

use std::hint::black_box;
use std::time::Instant;

use jacobnet::bench::time_method;
use jacobnet::cli::{ik_check, optbench, train_model, Schedule};
use jacobnet::datasets::{nnsample_par, read_split, write_split, Split};
use jacobnet::training::StdClock;
use jacobnet_core::dataset::{
    column_range, nnsample, rand_kine, template_value, DatasetFile, SampleOptions, Variant, CONSTANT_COLUMNS,
    KINEMATIC_WIDTH,
};
use jacobnet_core::kinematics::{fanuc_am120ib_10l, jacob0, jacobian_fd, puma560, skew, vex};
use jacobnet_core::math::TAU;
use jacobnet_core::metrics::{classification_metrics, regression_metrics};
use jacobnet_core::model::{CombinedModel, Phase, TrainHistory};
use jacobnet_core::nn::{grad_check, optimizer_step, Algo, LayerSpec, LossKind, Network, OptimizerConfig, SlotState};
use jacobnet_core::rng::stream;
use jacobnet_core::workspace::{compare_workspaces, gen_workspace_ik, gen_workspace_nn, GridGeometry, WorkspaceSpec};
use jacobnet_core::{Rotation, Tensor};
use rand::Rng;

const FD_TOL: f64 = 1e-5;
const ORACLE_SECONDS: f64 = 5.0;
const FANUC_TOL: f64 = 5e-3;
const GRAD_TOL: f64 = 1e-4;
const STEP_TOL: f64 = 1e-12;
const MIN_JSC: f64 = 0.90;
const MIN_MCC: f64 = 0.80;
const CONF_MINUTES: f64 = 15.0;
const MIN_R2: f64 = 0.60;
const MIN_EVS: f64 = 0.60;
const EST_MINUTES: f64 = 20.0;
const MIN_SPEEDUP: f64 = 50.0;
const SPEED_POSES: usize = 1000;
const MIN_IOU: f64 = 0.85;
const GRID_RES: usize = 20;
const SCHEMA_ROWS: usize = 300_000;
const SERIAL_ROWS: usize = 3_000;
const DESK_ROWS: usize = 30_000;
const OPT_MARGIN: f64 = 0.20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let mut rng = stream(9001, i);
        let m = rand_kine(&mut rng);
        let q: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..TAU)).collect();
        let a = jacob0(&m, &q).unwrap();
        let b = jacobian_fd(&m, &q, 1e-6).unwrap();
        worst = worst.max(a.max_abs_diff(&b));
    }
    let mut exact = true;
    for i in 0..1000 {
        let mut rng = stream(9002, i);
        let w = [
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
        ];
        exact &= vex(&skew(w), 0.0).unwrap() == w;
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst <= FD_TOL && exact && secs < ORACLE_SECONDS,
        format!("max |jacob0 - fd| = {worst:.2e}, vex(skew) exact = {exact}, {secs:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    let m = fanuc_am120ib_10l();
    let p = m.fkine(&[0.0; 6]).unwrap().translation;
    let j = jacob0(&m, &[0.0; 6]).unwrap();
    let want_p = [1.02, 0.0, -1.06];
    let want_c = [0.0, 1.02, 0.0, 0.0, 0.0, 1.0];
    let dp = (0..3).map(|k| (p[k] - want_p[k]).abs()).fold(0.0, f64::max);
    let dc = (0..6).map(|r| (j.get(r, 0) - want_c[r]).abs()).fold(0.0, f64::max);
    outcome(
        dp <= FANUC_TOL && dc <= FANUC_TOL,
        format!("t = ({:.4}, {:.4}, {:.4}), column 1 max dev {dc:.2e}", p[0], p[1], p[2]),
    )
}

fn criterion_3() -> Outcome {
    let stack = |out: usize, sigmoid: bool| {
        let mut s = vec![
            LayerSpec::Dense {
                out_dim: 6,
                bias: false,
            },
            LayerSpec::batchnorm(),
            LayerSpec::PRelu,
            LayerSpec::Dropout { rate: 0.3 },
            LayerSpec::dense(out),
        ];
        if sigmoid {
            s.push(LayerSpec::Sigmoid);
        }
        s
    };
    let mut rng = stream(9003, 0);
    let x = Tensor::matrix(12, 5, (0..60).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
    let yb = Tensor::matrix(12, 1, (0..12).map(|i| (i % 2) as f64).collect()).unwrap();
    let ym = Tensor::matrix(12, 2, (0..24).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let mut bce = Network::new(5, &stack(1, true), &mut stream(9004, 0)).unwrap();
    let mut mse = Network::new(5, &stack(2, false), &mut stream(9005, 0)).unwrap();
    let e_bce = grad_check(&mut bce, &x, &yb, LossKind::Bce, 1e-6, true, &mut stream(9006, 0)).unwrap();
    let e_mse = grad_check(&mut mse, &x, &ym, LossKind::Mse, 1e-6, true, &mut stream(9007, 0)).unwrap();

    let step = |algo: Algo, lr: Option<f64>, theta: f64, g: f64| {
        let mut cfg = OptimizerConfig::defaults(algo);
        if let Some(lr) = lr {
            cfg = cfg.with_lr(lr);
        }
        let mut state = SlotState::zeros(1);
        let mut p = [theta];
        optimizer_step(&cfg, &mut state, &mut p, &[g], 1).unwrap();
        p[0]
    };
    let steps = [
        (step(Algo::Sgd, Some(0.1), 1.0, 0.5), 0.95),
        (step(Algo::Adam, None, 0.0, 1.0), -0.001 / (1.0 + 1e-8)),
        (step(Algo::Adamax, None, 0.0, 1.0), -0.001),
    ];
    let worst_step = steps.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(
        e_bce < GRAD_TOL && e_mse < GRAD_TOL && worst_step <= STEP_TOL,
        format!("grad rel err BCE {e_bce:.2e}, MSE {e_mse:.2e}; optimizer step max dev {worst_step:.1e}"),
    )
}

/// The desk-scale datasets and the model trained on them.
struct Desk {
    conf_test: DatasetFile,
    jacob_train: DatasetFile,
    jacob_test: DatasetFile,
    model: CombinedModel,
    history: TrainHistory,
    conf_gen_secs: f64,
    jacob_gen_secs: f64,
    train_secs: f64,
}

fn desk() -> Desk {
    let t = Instant::now();
    let conf_opts = SampleOptions {
        variant: Variant::ConfKine,
        seed: 1,
        parallel: true,
        ..Default::default()
    };
    let (conf_train, conf_test) = nnsample_par(DESK_ROWS, &conf_opts, None).unwrap();
    let conf_gen_secs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let jacob_opts = SampleOptions {
        variant: Variant::Jacob0,
        seed: 2,
        parallel: true,
        ..Default::default()
    };
    let (jacob_train, jacob_test) = nnsample_par(DESK_ROWS, &jacob_opts, None).unwrap();
    let jacob_train = jacob_train.project_kinematic().unwrap();
    let jacob_test = jacob_test.project_kinematic().unwrap();
    let jacob_gen_secs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let (model, history) = train_model(&conf_train, &jacob_train, &Schedule::desk(), &StdClock::new()).unwrap();
    let train_secs = t.elapsed().as_secs_f64();
    eprintln!("desk: conf gen {conf_gen_secs:.0} s, jacob gen {jacob_gen_secs:.0} s, training {train_secs:.0} s");
    Desk {
        conf_test,
        jacob_train,
        jacob_test,
        model,
        history,
        conf_gen_secs,
        jacob_gen_secs,
        train_secs,
    }
}

fn criterion_4(d: &Desk) -> Outcome {
    let scores = d.model.confidence(&d.conf_test.features).unwrap();
    let m = classification_metrics(d.conf_test.labels.data(), &scores, 0.5).unwrap();
    let minutes = (d.conf_gen_secs + d.jacob_gen_secs + d.train_secs) / 60.0;
    outcome(
        m.jsc >= MIN_JSC && m.mcc >= MIN_MCC && minutes <= CONF_MINUTES,
        format!(
            "JSC {:.4}, MCC {:.4}, {minutes:.1} min (generation + training)",
            m.jsc, m.mcc
        ),
    )
}

fn criterion_5(d: &Desk) -> Outcome {
    let rows: Vec<usize> = (0..d.jacob_test.len())
        .filter(|&r| d.jacob_test.labels.row(r).iter().all(|v| v.is_finite()))
        .collect();
    let x = d.jacob_test.features.select_rows(&rows);
    let y = d.jacob_test.labels.select_rows(&rows);
    let m = regression_metrics(&y, &d.model.estimate(&x).unwrap()).unwrap();
    let minutes = (d.conf_gen_secs + d.jacob_gen_secs + d.train_secs) / 60.0;
    outcome(
        m.r2 >= MIN_R2 && m.evs >= MIN_EVS && minutes <= EST_MINUTES,
        format!(
            "R2 {:.4}, EVS {:.4} on {} solvable test rows, {minutes:.1} min",
            m.r2,
            m.evs,
            rows.len()
        ),
    )
}

fn criterion_6(d: &Desk) -> Outcome {
    let opts = SampleOptions::for_variant(Variant::ConfKine);
    let (poses, _) = nnsample(
        SPEED_POSES * 2,
        &SampleOptions {
            seed: 6,
            test_ratio: 0.5,
            ..opts.clone()
        },
    )
    .unwrap();
    let x = poses.features.select_rows(&(0..SPEED_POSES).collect::<Vec<_>>());
    let frozen = d.model.freeze().unwrap();
    let nn = time_method(|| drop(black_box(frozen.confidence(black_box(&x)))), x.rows(), 5).unwrap();
    let ik = time_method(|| drop(black_box(ik_check(black_box(&x), &opts, 6))), x.rows(), 3).unwrap();
    let ratio = ik / nn;
    outcome(
        ratio >= MIN_SPEEDUP,
        format!("NN {:.2e} s/pose, IK {:.2e} s/pose, ratio {ratio:.0}x", nn, ik),
    )
}

fn criterion_7(d: &Desk) -> Outcome {
    let m = puma560();
    let spec = WorkspaceSpec::constant_orientation(Rotation::IDENTITY);
    let geom = GridGeometry::cube(-0.4, 0.4, GRID_RES);
    let ik = gen_workspace_ik(&m, &spec, &geom).unwrap();
    let frozen = d.model.freeze().unwrap();
    let nn = gen_workspace_nn(&frozen, &m, &spec, &geom, 0.5).unwrap();
    let cmp = compare_workspaces(&ik, &nn).unwrap();
    outcome(
        cmp.iou >= MIN_IOU,
        format!(
            "IoU {:.4} ({} IK cells, {} NN cells of {})",
            cmp.iou,
            ik.occupied(),
            nn.occupied(),
            geom.cell_count()
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut problems = Vec::new();
    let opts = SampleOptions {
        variant: Variant::ConfKine,
        seed: 8,
        parallel: true,
        ..Default::default()
    };
    let t = Instant::now();
    let (train, test) = nnsample_par(SCHEMA_ROWS, &opts, None).unwrap();
    eprintln!("schema: {SCHEMA_ROWS} rows in {:.0} s", t.elapsed().as_secs_f64());
    for (f, rows) in [(&train, 297_000), (&test, 3_000)] {
        if f.features.shape() != [rows, KINEMATIC_WIDTH] || f.labels.shape() != [rows, 1] {
            problems.push(format!("shape {:?}/{:?}", f.features.shape(), f.labels.shape()));
        }
        for r in 0..f.len() {
            let row = f.features.row(r);
            for (col, &v) in row.iter().enumerate() {
                let ok = match column_range(KINEMATIC_WIDTH, col) {
                    Some((lo, hi)) => v >= lo && v < hi,
                    None => CONSTANT_COLUMNS.contains(&col) && v == template_value(col),
                };
                if !ok && problems.len() < 5 {
                    problems.push(format!("row {r} col {col} = {v}"));
                }
            }
            let label = f.labels.row(r)[0];
            if label != 0.0 && label != 1.0 && problems.len() < 5 {
                problems.push(format!("label {label}"));
            }
        }
    }
    let dir = tempfile::tempdir().unwrap();
    write_split(dir.path(), &train, Split::Train).unwrap();
    write_split(dir.path(), &test, Split::Test).unwrap();
    let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    for (f, split) in [(&train, Split::Train), (&test, Split::Test)] {
        let back = read_split(dir.path(), Variant::ConfKine, split).unwrap();
        if bits(&back.features) != bits(&f.features) || bits(&back.labels) != bits(&f.labels) {
            problems.push(format!("{split:?} CSV round trip differs"));
        }
    }
    let serial = SampleOptions {
        parallel: false,
        ..opts.clone()
    };
    for variant in [Variant::ConfKine, Variant::ConfDyna, Variant::JacobE, Variant::Jacob0] {
        let a = nnsample_par(
            SERIAL_ROWS,
            &SampleOptions {
                variant,
                ..serial.clone()
            },
            None,
        )
        .unwrap();
        let b = nnsample_par(
            SERIAL_ROWS,
            &SampleOptions {
                variant,
                ..opts.clone()
            },
            None,
        )
        .unwrap();
        if a != b {
            problems.push(format!("{variant}: parallel differs from serial"));
        }
    }
    outcome(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "{SCHEMA_ROWS} rows -> {}/{}, {} features, ranges, constants, CSV round trip, parallel = serial",
                train.len(),
                test.len(),
                train.features.cols()
            )
        } else {
            problems.join("; ")
        },
    )
}

fn criterion_9(d: &Desk) -> Outcome {
    let records = &d.history.records;
    let mut frozen_ok = true;
    for w in records.windows(2) {
        if w[1].phase == Phase::Confidence && w[1].encoder_checksum != w[0].encoder_checksum {
            frozen_ok = false;
        }
    }
    let cycle: Vec<Phase> = records
        .iter()
        .map(|r| r.phase)
        .filter(|p| *p != Phase::Pretrain)
        .collect();
    let pattern_ok = cycle.iter().enumerate().all(|(i, p)| {
        *p == if i % 3 == 2 {
            Phase::Estimation
        } else {
            Phase::Confidence
        }
    });
    outcome(
        frozen_ok && pattern_ok && !cycle.is_empty(),
        format!(
            "{} cycle epochs, encoder frozen in conf phases = {frozen_ok}, conf,conf,est = {pattern_ok}",
            cycle.len()
        ),
    )
}

fn criterion_10(d: &Desk) -> Outcome {
    let s = Schedule::desk();
    let curves = optbench(
        &d.jacob_train,
        &s.plan,
        s.pretrain_epochs,
        s.batch_size,
        s.seed,
        &StdClock::new(),
    )
    .unwrap();
    let last = |algo: Algo| curves.iter().find(|c| c.0 == algo).unwrap().1.last().unwrap().val_loss;
    let sgd = last(Algo::Sgd);
    let mut pass = curves.len() == 7;
    let mut parts = vec![format!("{} curves, sgd {sgd:.4}", curves.len())];
    for algo in [Algo::Adam, Algo::Adamax, Algo::Rmsprop] {
        let v = last(algo);
        let gain = 1.0 - v / sgd;
        pass &= gain >= OPT_MARGIN;
        parts.push(format!("{algo} {v:.4} ({:.0}% below)", gain * 100.0));
    }
    outcome(
        pass,
        format!(
            "final val loss after {} epochs: {}",
            s.pretrain_epochs,
            parts.join(", ")
        ),
    )
}

fn main() {
    // `cargo test -- --list` and filters from other targets should not start a long run
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |n: usize, name: &'static str, o: Outcome| {
        println!("[{}] {n:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };
    report(1, "kinematics oracle agreement", criterion_1());
    report(2, "fanuc fixture", criterion_2());
    report(3, "gradient integrity", criterion_3());
    let d = desk();
    report(4, "desk confidence training", criterion_4(&d));
    report(5, "desk estimation training", criterion_5(&d));
    report(6, "speed ratio", criterion_6(&d));
    report(7, "workspace fidelity", criterion_7(&d));
    report(8, "dataset schema", criterion_8());
    report(9, "training contract", criterion_9(&d));
    report(10, "optimizer bench", criterion_10(&d));
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {}/{} passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
