use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use topoeeg_learn::{svm_fit, Dataset, SampleShape, SvmConfig, SvmModel};

fn clusters(centres: &[([f64; 2], usize)], per: usize, spread: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spread).unwrap();
    let mut d = Dataset::new(SampleShape::new(1, 2, 1));
    let mut id = 0;
    for &(c, label) in centres {
        for _ in 0..per {
            let x = [c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)];
            d.push(&x, label, id).unwrap();
            id += 1;
        }
    }
    d
}

fn training_accuracy(model: &SvmModel, data: &Dataset) -> f64 {
    let hits = (0..data.len())
        .filter(|&i| model.predict(data.sample(i)).unwrap() == data.label(i))
        .count();
    hits as f64 / data.len() as f64
}

fn assert_kkt(model: &SvmModel, data: &Dataset, c: f64, tol: f64) {
    for (i, &alpha) in model.alphas.iter().enumerate() {
        let y = if data.label(i) == 1 { 1.0 } else { -1.0 };
        let margin = y * model.decision(data.sample(i)).unwrap();
        if alpha <= 0.0 {
            assert!(margin >= 1.0 - tol, "sample {i}: α=0, y·f={margin}");
        } else if alpha >= c {
            assert!(margin <= 1.0 + tol, "sample {i}: α=C, y·f={margin}");
        } else {
            assert!((margin - 1.0).abs() <= tol, "sample {i}: free α, y·f={margin}");
        }
    }
}

#[test]
fn separated_clusters_are_fit_exactly() {
    let data = clusters(&[([0.0, 0.0], 0), ([6.0, 0.0], 1)], 20, 0.3, 1);
    let cfg = SvmConfig::default();
    let model = svm_fit(&data, &cfg).unwrap();
    assert!(model.converged);
    assert_eq!(training_accuracy(&model, &data), 1.0);
    assert_kkt(&model, &data, cfg.c, cfg.tolerance);
}

#[test]
fn xor_arrangement_is_learned() {
    let data = clusters(
        &[
            ([1.0, 1.0], 1),
            ([-1.0, -1.0], 1),
            ([1.0, -1.0], 0),
            ([-1.0, 1.0], 0),
        ],
        25,
        0.25,
        2,
    );
    let cfg = SvmConfig::default();
    let model = svm_fit(&data, &cfg).unwrap();
    assert!(model.converged);
    let acc = training_accuracy(&model, &data);
    assert!(acc >= 0.95, "XOR training accuracy {acc}");
    assert_kkt(&model, &data, cfg.c, cfg.tolerance);
}

#[test]
fn kkt_holds_with_bounded_multipliers() {
    // Overlapping classes force some α to the box bound.
    let data = clusters(&[([0.0, 0.0], 0), ([0.5, 0.3], 1)], 30, 0.5, 3);
    let cfg = SvmConfig {
        c: 0.5,
        ..SvmConfig::default()
    };
    let model = svm_fit(&data, &cfg).unwrap();
    assert!(model.converged);
    assert!(model.alphas.iter().any(|&a| a >= cfg.c));
    assert_kkt(&model, &data, cfg.c, cfg.tolerance);
}

#[test]
fn decision_signs_survive_reordering() {
    let data = clusters(
        &[
            ([1.0, 1.0], 1),
            ([-1.0, -1.0], 1),
            ([1.0, -1.0], 0),
            ([-1.0, 1.0], 0),
        ],
        10,
        0.3,
        4,
    );
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(99));
    let mut shuffled = Dataset::new(data.shape());
    for &i in &order {
        shuffled.push(data.sample(i), data.label(i), data.subject(i)).unwrap();
    }
    let cfg = SvmConfig {
        tolerance: 1e-6,
        ..SvmConfig::default()
    };
    let a = svm_fit(&data, &cfg).unwrap();
    let b = svm_fit(&shuffled, &cfg).unwrap();
    let mut compared = 0;
    for i in -10..=10 {
        for j in -10..=10 {
            let p = [i as f64 * 0.2, j as f64 * 0.2];
            let (da, db) = (a.decision(&p).unwrap(), b.decision(&p).unwrap());
            assert!((da - db).abs() < 1e-3, "decision at {p:?}: {da} vs {db}");
            if da.abs() > 1e-3 {
                assert_eq!(da > 0.0, db > 0.0);
                compared += 1;
            }
        }
    }
    assert!(compared > 400);
}
