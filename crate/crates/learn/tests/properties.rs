use proptest::prelude::*;
use topoeeg_learn::cnn::softmax;
use topoeeg_learn::{Dataset, KnnClassifier, KnnConfig, SampleShape, Standardization};

proptest! {
    #[test]
    fn softmax_is_a_distribution(logits in prop::collection::vec(-500.0f64..500.0, 2..6)) {
        let p = softmax(&logits);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn softmax_ignores_a_common_shift(a in -50.0f64..50.0, b in -50.0f64..50.0, s in -100.0f64..100.0) {
        let p = softmax(&[a, b]);
        let q = softmax(&[a + s, b + s]);
        prop_assert!((p[0] - q[0]).abs() < 1e-12);
    }

    #[test]
    fn standardized_training_set_has_zero_mean(
        rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..20)
    ) {
        let mut d = Dataset::new(SampleShape::new(1, 3, 1));
        for (i, r) in rows.iter().enumerate() {
            d.push(r, i % 2, i as u32).unwrap();
        }
        let stats = Standardization::fit(&d).unwrap();
        stats.apply(&mut d).unwrap();
        for j in 0..3 {
            let mean = (0..d.len()).map(|i| d.sample(i)[j]).sum::<f64>() / d.len() as f64;
            prop_assert!(mean.abs() < 1e-9);
        }
    }

    #[test]
    fn knn_prediction_ignores_training_order(
        rows in prop::collection::vec((prop::collection::vec(-5i32..5, 2), 0usize..2), 3..15),
        rotate in 0usize..15,
        query in prop::collection::vec(-5i32..5, 2),
    ) {
        // Integer coordinates create many distance ties; the tie rule is
        // index-based, so only tie-free queries are order independent.
        let q: Vec<f64> = query.iter().map(|&v| v as f64 + 0.37).collect();
        let build = |order: &[usize]| {
            let mut d = Dataset::new(SampleShape::new(1, 2, 1));
            for &i in order {
                let x: Vec<f64> = rows[i].0.iter().map(|&v| v as f64).collect();
                d.push(&x, rows[i].1, i as u32).unwrap();
            }
            KnnClassifier::fit(d, KnnConfig::default()).unwrap()
        };
        let mut order: Vec<usize> = (0..rows.len()).collect();
        let mut dists: Vec<f64> = rows
            .iter()
            .map(|(x, _)| (x[0] as f64 - q[0]).powi(2) + (x[1] as f64 - q[1]).powi(2))
            .collect();
        dists.sort_by(f64::total_cmp);
        prop_assume!(dists[2] != dists[3.min(dists.len() - 1)] || dists.len() == 3);
        let a = build(&order).predict(&q).unwrap();
        order.rotate_left(rotate % rows.len());
        let b = build(&order).predict(&q).unwrap();
        prop_assert_eq!(a, b);
    }
}
