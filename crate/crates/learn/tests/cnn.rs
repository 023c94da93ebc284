use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topoeeg_learn::cnn::softmax;
use topoeeg_learn::{
    cnn_train, Checkpoint, CnnArchitecture, Dataset, LearnError, Network, Precision, SampleShape,
    Standardization, TrainConfig,
};

/// Independent shape arithmetic: same-padded stride-1 convolutions keep the
/// spatial size, a 2×2 pool floors it.
fn expected_pooled(h: usize, w: usize, filters: usize) -> (usize, usize, usize, usize) {
    let (ph, pw) = (h / 2, w / 2);
    (ph, pw, filters, ph * pw * filters)
}

#[test]
fn topographic_input_pools_to_7x7x64() {
    let arch = CnnArchitecture::standard(SampleShape::new(15, 15, 5));
    let (h, w, c, flat) = expected_pooled(15, 15, 64);
    assert_eq!((h, w, c, flat), (7, 7, 64, 3136));
    let net = Network::<f32>::init(arch, 1).unwrap();
    let trace = net.shape_trace();
    let pooled = trace.iter().find(|(kind, _)| *kind == "maxpool").unwrap().1;
    assert_eq!((pooled.height, pooled.width, pooled.channels), (h, w, c));
    let flatten = trace.iter().find(|(kind, _)| *kind == "flatten").unwrap().1;
    assert_eq!(flatten.len(), flat);
    assert_eq!(arch.flatten_len(), flat);
    assert_eq!(trace.last().unwrap().1.len(), 2);
}

#[test]
fn concatenated_input_pools_to_17x2x64() {
    let arch = CnnArchitecture::standard(SampleShape::new(34, 5, 1));
    let (h, w, c, flat) = expected_pooled(34, 5, 64);
    assert_eq!((h, w, c, flat), (17, 2, 64, 2176));
    let net = Network::<f32>::init(arch, 1).unwrap();
    let trace = net.shape_trace();
    let pooled = trace.iter().find(|(kind, _)| *kind == "maxpool").unwrap().1;
    assert_eq!((pooled.height, pooled.width, pooled.channels), (h, w, c));
    assert_eq!(arch.flatten_len(), flat);
}

fn small_arch(input: SampleShape) -> CnnArchitecture {
    CnnArchitecture {
        conv_filters: 8,
        dense_units: 16,
        ..CnnArchitecture::standard(input)
    }
}

/// Two classes separated along a fixed direction in a 4×4×1 input.
fn separable(n: usize, first_subject: u32, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = Dataset::new(SampleShape::new(4, 4, 1));
    for i in 0..n {
        let label = i % 2;
        let sign = if label == 1 { 1.0 } else { -1.0 };
        let x: Vec<f64> = (0..16)
            .map(|j| sign * (1.0 + (j % 3) as f64 * 0.5) + rng.random_range(-0.3..0.3))
            .collect();
        d.push(&x, label, first_subject + i as u32).unwrap();
    }
    d
}

fn accuracy<F: topoeeg_learn::cnn::Scalar>(net: &mut Network<F>, data: &Dataset) -> f64 {
    let probs = net.predict_proba_batch(data.samples()).unwrap();
    let hits = probs
        .iter()
        .enumerate()
        .filter(|(i, p)| usize::from(p[1] > p[0]) == data.label(*i))
        .count();
    hits as f64 / data.len() as f64
}

#[test]
fn toy_set_loss_decreases_and_is_fit() {
    let train = separable(20, 0, 11);
    let val = separable(10, 100, 12);
    let arch = CnnArchitecture {
        conv_dropout: 0.0,
        dense_dropout: 0.0,
        ..small_arch(train.shape())
    };
    let mut net = Network::<f64>::init(arch, 3).unwrap();
    let cfg = TrainConfig {
        max_epochs: 30,
        patience: 29,
        batch_size: 20,
        seed: 5,
        ..TrainConfig::default()
    };
    let history = cnn_train(&mut net, &train, &val, &cfg).unwrap();
    let losses: Vec<f64> = history.epochs.iter().map(|e| e.train_loss).collect();
    assert!(losses.len() >= 5);
    for pair in losses[..5].windows(2) {
        assert!(pair[1] < pair[0], "training loss not decreasing: {losses:?}");
    }
    assert_eq!(accuracy(&mut net, &train), 1.0);
}

#[test]
fn patience_zero_stops_at_first_non_improving_epoch() {
    // A learning rate this large makes the validation loss bounce quickly.
    let train = separable(20, 0, 21);
    let val = separable(10, 100, 22);
    let mut net = Network::<f64>::init(small_arch(train.shape()), 4).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.05,
        max_epochs: 50,
        patience: 0,
        batch_size: 4,
        ..TrainConfig::default()
    };
    let history = cnn_train(&mut net, &train, &val, &cfg).unwrap();
    assert!(history.stopped_early);
    let n = history.epochs.len();
    let vals: Vec<f64> = history.epochs.iter().map(|e| e.val_loss).collect();
    for i in 1..n - 1 {
        assert!(vals[i] < vals[i - 1], "continued past a non-improving epoch: {vals:?}");
    }
    assert!(vals[n - 1] >= vals[n - 2]);
    assert_eq!(history.best_epoch, n - 2);
}

#[test]
fn restored_weights_come_from_best_validation_epoch() {
    let train = separable(20, 0, 31);
    let val = separable(10, 100, 32);
    let mut net = Network::<f64>::init(small_arch(train.shape()), 6).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.02,
        max_epochs: 12,
        patience: 3,
        batch_size: 5,
        ..TrainConfig::default()
    };
    let history = cnn_train(&mut net, &train, &val, &cfg).unwrap();
    let best = history
        .epochs
        .iter()
        .map(|e| e.val_loss)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(history.epochs[history.best_epoch].val_loss, best);
    let mut total = 0.0;
    for i in 0..val.len() {
        let p = net.predict_proba(val.sample(i)).unwrap();
        total -= p[val.label(i)].ln();
    }
    assert!((total / val.len() as f64 - best).abs() < 1e-9);
}

#[test]
fn empty_sets_and_shared_subjects_are_rejected() {
    let train = separable(6, 0, 1);
    let empty = Dataset::new(train.shape());
    let mut net = Network::<f64>::init(small_arch(train.shape()), 0).unwrap();
    let cfg = TrainConfig {
        max_epochs: 2,
        patience: 1,
        ..TrainConfig::default()
    };
    assert!(matches!(
        cnn_train(&mut net, &empty, &train, &cfg),
        Err(LearnError::EmptyTrainingSet)
    ));
    assert!(matches!(
        cnn_train(&mut net, &train, &empty, &cfg),
        Err(LearnError::EmptyValidationSet)
    ));
    let overlap = separable(4, 3, 2);
    assert!(matches!(
        cnn_train(&mut net, &train, &overlap, &cfg),
        Err(LearnError::SubjectOverlap { subject: 3 })
    ));
}

#[test]
fn probabilities_sum_to_one_and_are_deterministic() {
    let arch = CnnArchitecture::standard(SampleShape::new(15, 15, 5));
    let mut net = Network::<f32>::init(arch, 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let x: Vec<f64> = (0..arch.input.len()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let p = net.predict_proba(&x).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.iter().all(|&v| v >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let batch = net.predict_proba_batch([x.as_slice(), x.as_slice()]).unwrap();
        assert_eq!(batch[0], batch[1]);
        assert_eq!(batch[0], p);
    }
    assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
    assert!(matches!(
        net.predict_proba(&[0.0; 10]),
        Err(LearnError::ShapeMismatch { .. })
    ));
}

#[test]
fn checkpoint_round_trip_preserves_predictions() {
    let train = separable(10, 0, 41);
    let val = separable(6, 100, 42);
    let mut net = Network::<f32>::init(small_arch(train.shape()), 2).unwrap();
    let cfg = TrainConfig {
        max_epochs: 3,
        patience: 2,
        ..TrainConfig::default()
    };
    cnn_train(&mut net, &train, &val, &cfg).unwrap();
    let stats = Standardization::fit(&train).unwrap();
    let ckpt = Checkpoint::capture(&net, Precision::F32, Some(stats.clone()), "abc123");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    ckpt.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    assert_eq!(loaded, ckpt);
    assert_eq!(loaded.standardization, Some(stats));
    assert_eq!(loaded.fingerprint, "abc123");

    let mut restored = loaded.restore::<f32>().unwrap();
    for i in 0..val.len() {
        assert_eq!(
            net.predict_proba(val.sample(i)).unwrap(),
            restored.predict_proba(val.sample(i)).unwrap()
        );
    }

    let mut broken = ckpt.clone();
    broken.tensors.pop();
    assert!(matches!(broken.restore::<f32>(), Err(LearnError::Checkpoint(_))));
    let mut reshaped = ckpt;
    reshaped.tensors[0].shape = vec![2];
    assert!(reshaped.restore::<f64>().is_err());
}
