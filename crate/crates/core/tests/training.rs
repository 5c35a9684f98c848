use jacobnet_core::dataset::{nnsample, DatasetFile, SampleOptions, Variant};
use jacobnet_core::model::*;
use jacobnet_core::nn::{Algo, OptimizerConfig};

fn data() -> (DatasetFile, DatasetFile) {
    let base = SampleOptions {
        plim: 20,
        restarts: 2,
        test_ratio: 0.1,
        ..Default::default()
    };
    let conf = SampleOptions {
        variant: Variant::ConfKine,
        seed: 1,
        ..base.clone()
    };
    let jacob = SampleOptions {
        variant: Variant::Jacob0,
        seed: 2,
        ..base
    };
    let (c, _) = nnsample(240, &conf).unwrap();
    let (j, _) = nnsample(240, &jacob).unwrap();
    (c, j.project_kinematic().unwrap())
}

fn plan() -> HiddenPlan {
    HiddenPlan {
        encoder: vec![16, 16],
        conf_head: vec![8, 8],
        est_head: vec![12, 12],
        dropout: 0.2,
        encoder_regularized: 2,
        head_regularized: 1,
    }
}

fn cfg(epochs: usize) -> TrainConfig {
    TrainConfig {
        batch_size: 32,
        epochs,
        optimizer: OptimizerConfig::defaults(Algo::Adam),
        seed: 11,
        ..Default::default()
    }
}

fn trained() -> (CombinedModel, TrainHistory, DatasetFile) {
    let (conf, jacob) = data();
    let mut model = build_combined(24, &plan(), 3).unwrap();
    let mut history = pretrain_encoder(&mut model, &jacob, &cfg(2), &NoClock).unwrap();
    history.extend(train_cycle(&mut model, &conf, &jacob, &cfg(9), &NoClock).unwrap());
    (model, history, conf)
}

#[test]
fn encoder_is_frozen_during_confidence_phases() {
    let (_, h, _) = trained();
    use Phase::*;
    let mut expected = vec![Pretrain, Pretrain];
    for _ in 0..3 {
        expected.extend([Confidence, Confidence, Estimation]);
    }
    assert_eq!(h.phases(), expected);
    assert_eq!(
        h.records.iter().map(|r| r.epoch).collect::<Vec<_>>(),
        (1..=11).collect::<Vec<_>>()
    );
    for w in h.records.windows(2) {
        match w[1].phase {
            Confidence => assert_eq!(w[1].encoder_checksum, w[0].encoder_checksum, "epoch {}", w[1].epoch),
            _ => assert_ne!(w[1].encoder_checksum, w[0].encoder_checksum, "epoch {}", w[1].epoch),
        }
    }
    assert!(h
        .records
        .iter()
        .all(|r| r.train_loss.is_finite() && r.val_loss.is_finite()));
}

#[test]
fn training_is_reproducible() {
    let (a, ha, _) = trained();
    let (b, hb, _) = trained();
    assert_eq!(ha, hb);
    assert_eq!(a.to_bytes(), b.to_bytes());
}

#[test]
fn save_load_preserves_predictions() {
    let (model, _, conf) = trained();
    let back = CombinedModel::from_bytes(&model.to_bytes()).unwrap();
    let x = &conf.features;
    assert_eq!(back.confidence(x).unwrap(), model.confidence(x).unwrap());
    assert_eq!(back.estimate(x).unwrap(), model.estimate(x).unwrap());
    assert_eq!(back.predict(x).unwrap(), model.predict(x).unwrap());
    assert!(CombinedModel::from_bytes(&model.to_bytes()[..40]).is_err());
}

#[test]
fn frozen_form_agrees_with_the_model() {
    let (model, _, conf) = trained();
    let frozen = model.freeze().unwrap();
    let a = model.confidence(&conf.features).unwrap();
    let b = frozen.confidence(&conf.features).unwrap();
    for (u, v) in a.iter().zip(&b) {
        assert!((u - v).abs() <= 1e-10);
    }
}

#[test]
fn wrong_width_is_rejected() {
    let (conf, _) = data();
    let mut model = build_combined(96, &plan(), 3).unwrap();
    assert!(model.confidence(&conf.features).is_err());
    let mut c = cfg(1);
    c.batch_size = 1;
    assert!(train_cycle(&mut model, &conf, &conf, &c, &NoClock).is_err());
}
