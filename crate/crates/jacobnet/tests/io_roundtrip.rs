use jacobnet::csvio::{read_matrix_file, write_matrix_file};
use jacobnet::datasets::{nnsample_par, read_split, write_split, Split};
use jacobnet::training::{load_model, save_model};
use jacobnet_core::dataset::{nnsample, SampleOptions, Variant};
use jacobnet_core::model::{build_combined, HiddenPlan};
use jacobnet_core::Tensor;
use proptest::prelude::*;
use tempfile::TempDir;

#[test]
fn dataset_files_round_trip_bitwise() {
    let dir = TempDir::new().unwrap();
    let opts = SampleOptions {
        variant: Variant::Jacob0,
        test_ratio: 0.1,
        seed: 5,
        ..Default::default()
    };
    let (train, test) = nnsample(110, &opts).unwrap();
    assert_eq!(train.len(), 99);
    write_split(dir.path(), &train, Split::Train).unwrap();
    write_split(dir.path(), &test, Split::Test).unwrap();
    let back = read_split(dir.path(), Variant::Jacob0, Split::Train).unwrap();
    let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back.features), bits(&train.features));
    assert_eq!(bits(&back.labels), bits(&train.labels));
    let text = std::fs::read_to_string(dir.path().join("jacob0_label_train.csv")).unwrap();
    if train.negatives() > 0 {
        assert!(text.contains("inf"));
    }
}

#[test]
fn parallel_sampling_matches_serial() {
    for variant in [Variant::ConfKine, Variant::JacobE] {
        let serial = SampleOptions {
            variant,
            seed: 8,
            test_ratio: 0.05,
            ..Default::default()
        };
        let parallel = SampleOptions {
            parallel: true,
            ..serial.clone()
        };
        let a = nnsample_par(80, &serial, None).unwrap();
        for threads in [1, 3] {
            assert_eq!(nnsample_par(80, &parallel, Some(threads)).unwrap(), a);
        }
    }
}

#[test]
fn model_files_round_trip() {
    let dir = TempDir::new().unwrap();
    let plan = HiddenPlan {
        encoder: vec![8, 8],
        conf_head: vec![4],
        est_head: vec![4],
        dropout: 0.0,
        encoder_regularized: 1,
        head_regularized: 1,
    };
    let model = build_combined(24, &plan, 1).unwrap();
    let path = dir.path().join("m.jnm");
    save_model(&path, &model).unwrap();
    let back = load_model(&path).unwrap();
    let x = Tensor::matrix(3, 24, (0..72).map(|i| i as f64 * 0.01).collect()).unwrap();
    assert_eq!(back.predict(&x).unwrap(), model.predict(&x).unwrap());
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    assert!(matches!(load_model(&path), Err(jacobnet::Error::Model(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn matrix_files_round_trip(rows in 1usize..20, cols in 1usize..8, seed in any::<u64>()) {
        let dir = TempDir::new().unwrap();
        let mut x = seed;
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let v = f64::from_bits(x);
                if v.is_nan() { 0.0 } else { v }
            })
            .collect();
        let m = Tensor::matrix(rows, cols, data).unwrap();
        let path = dir.path().join("m.csv");
        write_matrix_file(&path, &m).unwrap();
        let back = read_matrix_file(&path, Some(cols)).unwrap();
        let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&m));
    }
}
