use icuae_core::data::{
    generate_synthetic_cohort, prepare_cohort, FeatureSchema, GeneratorParams, PrepareOptions,
    ProcessedDataset,
};
use icuae_core::{
    build_model, evaluate, minibatch_iter, train, ActivationKind, AnyModel, Autoencoder,
    DenseAutoencoder, ModelKind, OptimizerKind, SeqBatch, TrainConfig,
};

fn cohort(n: usize, seed: u64, params: &GeneratorParams, interval: usize) -> ProcessedDataset {
    let (events, stays) = generate_synthetic_cohort(n, seed, params).unwrap();
    let cohort = prepare_cohort(&stays, events, &PrepareOptions::default()).unwrap();
    cohort.dataset(interval, &FeatureSchema::default()).unwrap()
}

/// First 32 training windows of a noise-free, fully observed cohort.
fn small_batch(interval: usize) -> SeqBatch {
    let ds = cohort(60, 11, &GeneratorParams::noise_free(), interval);
    ds.train.batch.select(&(0..32).collect::<Vec<_>>())
}

fn quick_config(epochs: usize) -> TrainConfig {
    TrainConfig {
        batch_size: 16,
        max_epochs: epochs,
        patience: epochs,
        seed: 4,
        ..TrainConfig::default()
    }
}

#[test]
fn identical_runs_give_identical_histories() {
    let ds = cohort(40, 2, &GeneratorParams::default(), 8);
    for kind in [ModelKind::Dense2, ModelKind::Seq] {
        let run = || {
            let model = build_model(kind, 8, 9).unwrap();
            train(
                model,
                &ds.train.batch,
                &ds.validation.batch,
                &quick_config(3),
            )
            .unwrap()
        };
        let (m1, h1) = run();
        let (m2, h2) = run();
        assert_eq!(h1, h2);
        assert_eq!(m1, m2);
        assert_eq!(h1.to_csv(), h2.to_csv());
    }
}

#[test]
fn zero_learning_rate_freezes_parameters() {
    let ds = cohort(40, 2, &GeneratorParams::default(), 4);
    let model = build_model(ModelKind::Dense1, 4, 1).unwrap();
    let config = TrainConfig {
        learning_rate: 0.0,
        ..quick_config(4)
    };
    let (trained, history) = train(
        model.clone(),
        &ds.train.batch,
        &ds.validation.batch,
        &config,
    )
    .unwrap();
    assert_eq!(trained.flat_params(), model.flat_params());
    let first = history.epochs[0];
    for r in &history.epochs {
        assert_eq!(r.val_mse, first.val_mse);
        assert!((r.train_mse - first.train_mse).abs() <= 1e-12 * first.train_mse);
    }
    assert_eq!(history.best_epoch, 1);
}

#[test]
fn returned_model_is_the_best_validation_epoch() {
    let ds = cohort(60, 5, &GeneratorParams::default(), 4);
    let model = build_model(ModelKind::Dense1, 4, 3).unwrap();
    let config = TrainConfig {
        learning_rate: 0.05,
        ..quick_config(12)
    };
    let (trained, history) = train(model, &ds.train.batch, &ds.validation.batch, &config).unwrap();
    let best = history.best().unwrap();
    let min = history
        .epochs
        .iter()
        .map(|r| r.val_mse)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(best.val_mse, min);
    assert_eq!(
        evaluate(&trained, &ds.validation.batch, false).unwrap(),
        best.val_mse
    );
}

#[test]
fn early_stopping_ends_the_run() {
    let ds = cohort(40, 6, &GeneratorParams::default(), 4);
    let config = TrainConfig {
        learning_rate: 0.0,
        patience: 2,
        max_epochs: 50,
        ..quick_config(50)
    };
    let (_, history) = train(
        build_model(ModelKind::Dense1, 4, 1).unwrap(),
        &ds.train.batch,
        &ds.validation.batch,
        &config,
    )
    .unwrap();
    assert_eq!(history.epochs.len(), 3);
    assert!(history.stopped_early);
}

#[test]
fn batch_order_does_not_depend_on_the_model() {
    let ds = cohort(40, 2, &GeneratorParams::default(), 4);
    let n = ds.train.len();
    for epoch in 0..3 {
        let batches = minibatch_iter(n, 16, 4, epoch);
        assert_eq!(batches, minibatch_iter(n, 16, 4, epoch));
        assert_eq!(batches.concat().len(), n);
    }
}

#[test]
fn linear_probe_descends_monotonically() {
    let batch = small_batch(4);
    let model = DenseAutoencoder::init_with_activations(
        120,
        &[12],
        8,
        ActivationKind::Identity,
        ActivationKind::Identity,
    )
    .unwrap();
    let config = TrainConfig {
        batch_size: 32,
        max_epochs: 30,
        patience: 30,
        learning_rate: 1e-4,
        optimizer: OptimizerKind::Sgd,
        clip_norm: None,
        ..TrainConfig::default()
    };
    let (_, history) = train(model, &batch, &batch, &config).unwrap();
    for pair in history.epochs.windows(2) {
        assert!(pair[1].train_mse <= pair[0].train_mse, "{pair:?}");
    }
}

#[test]
fn training_reduces_reconstruction_error_for_every_kind() {
    let batch = small_batch(4);
    for kind in [ModelKind::Dense1, ModelKind::Dense2, ModelKind::Seq] {
        let model: AnyModel = build_model(kind, 4, 1).unwrap();
        let before = evaluate(&model, &batch, false).unwrap();
        let config = TrainConfig {
            batch_size: 32,
            learning_rate: 3e-3,
            ..quick_config(150)
        };
        let (trained, _) = train(model, &batch, &batch, &config).unwrap();
        let after = evaluate(&trained, &batch, false).unwrap();
        assert!(after < before / 5.0, "{kind}: {before} -> {after}");
    }
}

#[test]
fn numeric_failures_name_the_batch() {
    let batch = small_batch(4);
    let config = TrainConfig {
        batch_size: 32,
        learning_rate: 1e308,
        clip_norm: None,
        ..quick_config(5)
    };
    let err = train(
        build_model(ModelKind::Dense1, 4, 1).unwrap(),
        &batch,
        &batch,
        &config,
    )
    .unwrap_err();
    assert!(matches!(err, icuae_core::Error::Numeric(_)), "{err}");
    assert!(err.to_string().contains("epoch"), "{err}");
}
