use std::fs;
use std::path::Path;
use std::process::Command;

use jacobnet::datasets::{feature_file_name, label_file_name, Split};
use jacobnet_core::dataset::Variant;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_jacobnet"));
    c.env_remove("JACOBNET_OUT_DIR");
    c
}

fn run(args: &[&str]) -> std::process::Output {
    bin().args(args).output().unwrap()
}

fn gen(dir: &Path, variant: &str, num: &str, seed: &str) {
    let out = run(&[
        "gen",
        "--variant",
        variant,
        "--num",
        num,
        "--seed",
        seed,
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn lines(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

/// Small conf-kine + jacob-0 pair, generated once per test.
fn small_data() -> TempDir {
    let dir = TempDir::new().unwrap();
    gen(dir.path(), "conf-kine", "400", "1");
    gen(dir.path(), "jacob-0", "400", "2");
    dir
}

#[test]
fn gen_writes_split_files_and_metadata() {
    let dir = TempDir::new().unwrap();
    gen(dir.path(), "conf-kine", "1000", "7");
    let p = dir.path();
    assert_eq!(lines(&p.join("conf_feature_train.csv")), 990);
    assert_eq!(lines(&p.join("conf_label_train.csv")), 990);
    assert_eq!(lines(&p.join("conf_feature_test.csv")), 10);
    assert_eq!(lines(&p.join("conf_label_test.csv")), 10);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("conf_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["knobs"]["type"], "spherical");
    assert!(meta["positive_ratio_train"].as_f64().unwrap() > 0.0);
}

#[test]
fn gen_is_repeatable() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    gen(a.path(), "jacob-e", "60", "3");
    let out = run(&[
        "gen",
        "--variant",
        "jacob-e",
        "--num",
        "60",
        "--seed",
        "3",
        "--parallel",
        "--threads",
        "2",
        "--out",
        b.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for split in [Split::Train, Split::Test] {
        for name in [
            feature_file_name(Variant::JacobE, split),
            label_file_name(Variant::JacobE, split),
        ] {
            assert_eq!(
                fs::read(a.path().join(&name)).unwrap(),
                fs::read(b.path().join(&name)).unwrap(),
                "{name}"
            );
        }
    }
}

#[test]
fn output_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    let out = bin()
        .env("JACOBNET_OUT_DIR", dir.path())
        .args(["gen", "--variant", "conf-dyna", "--num", "20"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("conf_feature_dyna_train.csv").exists());
    assert!(dir.path().join("conf_dyna_meta.json").exists());
}

#[test]
fn bad_flags_exit_2_with_usage() {
    let out = run(&["gen", "--variant", "bogus", "--num", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bogus") && err.contains("Usage"), "{err}");
    assert_eq!(
        run(&["gen", "--variant", "conf-kine", "--num", "10", "--test-ratio", "1.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let out = run(&[
        "gen",
        "--variant",
        "conf-kine",
        "--num",
        "5",
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn train_eval_and_workspace() {
    let data = small_data();
    let d = data.path().to_str().unwrap();
    let out_dir = TempDir::new().unwrap();
    let o = out_dir.path().to_str().unwrap();
    let out = run(&[
        "train",
        "--data",
        d,
        "--project-kinematic",
        "--epochs",
        "8",
        "--pretrain-epochs",
        "2",
        "--out",
        o,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let history = fs::read_to_string(out_dir.path().join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1 + 8);
    assert!(history.starts_with("epoch,phase,train_loss,val_loss"));

    let model = out_dir.path().join("model.jnm");
    let out = run(&[
        "eval",
        "--data",
        d,
        "--project-kinematic",
        "--model",
        model.to_str().unwrap(),
        "--baselines",
        "--out",
        o,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let conf = fs::read_to_string(out_dir.path().join("bench_conf.csv")).unwrap();
    let methods: Vec<&str> = conf.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        methods,
        ["NN(.25)", "NN(.5)", "NN(.75)", "IK", "LogisticReg.", "RidgeReg.(0.5)"]
    );
    for l in conf.lines().skip(1) {
        let t: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(t > 0.0, "{l}");
    }
    let est = fs::read_to_string(out_dir.path().join("bench_est.csv")).unwrap();
    assert_eq!(est.lines().count(), 4);

    let out = run(&[
        "workspace",
        "--model",
        model.to_str().unwrap(),
        "--resolution",
        "4",
        "--out",
        o,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["ws_ik.csv", "ws_ik.rle", "ws_nn.csv", "ws_nn.rle", "ws_report.csv"] {
        assert!(out_dir.path().join(f).exists(), "{f}");
    }
    assert_eq!(lines(&out_dir.path().join("ws_ik.csv")), 1 + 64);
    let grid = jacobnet::grid::read_rle_file(&out_dir.path().join("ws_ik.rle")).unwrap();
    assert_eq!(grid.occupancy.len(), 64);
}

#[test]
fn optimizer_flag_changes_training() {
    let data = small_data();
    let d = data.path().to_str().unwrap();
    let mut histories = Vec::new();
    for algo in ["adam", "adamax"] {
        let o = TempDir::new().unwrap();
        let out = run(&[
            "train",
            "--data",
            d,
            "--project-kinematic",
            "--epochs",
            "3",
            "--pretrain-epochs",
            "1",
            "--optimizer",
            algo,
            "--out",
            o.path().to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let h = fs::read_to_string(o.path().join("history.csv")).unwrap();
        // drop the wall-clock column
        let h: Vec<String> = h.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect();
        histories.push(h);
    }
    assert_ne!(histories[0], histories[1]);
    assert_eq!(
        run(&["train", "--data", d, "--optimizer", "adamw"]).status.code(),
        Some(2)
    );
}

#[test]
fn data_problems_exit_4() {
    let data = small_data();
    let d = data.path();
    let o = TempDir::new().unwrap();
    let os = o.path().to_str().unwrap();
    // widths differ without projection
    let out = run(&[
        "train",
        "--data",
        d.to_str().unwrap(),
        "--epochs",
        "2",
        "--pretrain-epochs",
        "1",
        "--out",
        os,
    ]);
    assert_eq!(out.status.code(), Some(4));
    // missing label file
    fs::remove_file(d.join("conf_label_train.csv")).unwrap();
    let out = run(&[
        "train",
        "--data",
        d.to_str().unwrap(),
        "--project-kinematic",
        "--epochs",
        "2",
        "--pretrain-epochs",
        "1",
        "--out",
        os,
    ]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("conf_label_train.csv"), "{err}");
    // missing model
    let out = run(&[
        "eval",
        "--data",
        d.to_str().unwrap(),
        "--model",
        d.join("none.jnm").to_str().unwrap(),
        "--out",
        os,
    ]);
    assert_eq!(out.status.code(), Some(4));
    // malformed row
    let p = d.join("jacob0_label_test.csv");
    let mut text = fs::read_to_string(&p).unwrap();
    text.push_str("1,2,3\n");
    fs::write(&p, text).unwrap();
    let err = jacobnet::datasets::read_split(d, Variant::Jacob0, Split::Test).unwrap_err();
    assert!(matches!(err, jacobnet::Error::MalformedRow { row: 4, .. }), "{err}");
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn stub_workspaces() {
    let o = TempDir::new().unwrap();
    let os = o.path().to_str().unwrap();
    // a grid far outside the arm's reach: the always-1 stub has IoU 0
    let out = run(&[
        "workspace",
        "--constant-confidence",
        "1",
        "--lo",
        "2.0",
        "--hi",
        "3.0",
        "--resolution",
        "3",
        "--out",
        os,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(o.path().join("ws_report.csv")).unwrap();
    let row: Vec<&str> = report.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((row[1], row[2], row[3]), ("0", "0", "27"));
    // the always-0 stub there matches the empty IK grid exactly
    let out = run(&[
        "workspace",
        "--constant-confidence",
        "0",
        "--lo",
        "2.0",
        "--hi",
        "3.0",
        "--resolution",
        "3",
        "--out",
        os,
    ]);
    assert!(out.status.success());
    let report = fs::read_to_string(o.path().join("ws_report.csv")).unwrap();
    assert_eq!(report.lines().nth(1).unwrap().split(',').nth(1), Some("1"));
    assert_eq!(
        run(&["workspace", "--resolution", "3", "--out", os]).status.code(),
        Some(2)
    );
}

#[test]
fn optbench_writes_seven_curves() {
    let data = small_data();
    let o = TempDir::new().unwrap();
    let out = run(&[
        "optbench",
        "--data",
        data.path().to_str().unwrap(),
        "--project-kinematic",
        "--epochs",
        "2",
        "--out",
        o.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut first = Vec::new();
    let mut second = Vec::new();
    for algo in ["sgd", "adam", "nadam", "adamax", "rmsprop", "adagrad", "adadelta"] {
        let text = fs::read_to_string(o.path().join(format!("optbench_{algo}.csv"))).unwrap();
        let rows: Vec<Vec<String>> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(String::from).collect())
            .collect();
        assert_eq!(rows.len(), 3);
        first.push(rows[0][2].clone());
        second.push((algo, rows[1][2].clone()));
    }
    assert!(first.windows(2).all(|w| w[0] == w[1]), "{first:?}");
    let get = |name: &str| second.iter().find(|s| s.0 == name).unwrap().1.clone();
    assert_ne!(get("adamax"), get("rmsprop"));
    assert_eq!(lines(&o.path().join("optbench_summary.csv")), 8);
}
