use std::collections::BTreeSet;

use topoeeg_core::eval::{
    aggregate_subject, build_trial_data, compute_metrics, extract_features, percent_half_up, render_report,
    run_with_features, stratified_folds, tensorize_all, ConfusionMatrix, ExperimentReport, FeatureSet,
};
use topoeeg_core::ingest::{CohortSpec, SyntheticCohort};
use topoeeg_core::{ClassifierKind, CoreError, ElectrodeLayout, FeatureModel, Label, PipelineConfig};

fn balanced(n: u32, patients: u32) -> Vec<(u32, Label)> {
    (0..n)
        .map(|i| (i * 3 + 1, if i < patients { Label::Patient } else { Label::Control }))
        .collect()
}

fn votes(p: usize, t: usize) -> Vec<Label> {
    (0..t).map(|i| if i < p { Label::Patient } else { Label::Control }).collect()
}

#[test]
fn sixty_four_subjects_give_eight_balanced_folds() {
    let subjects = balanced(64, 32);
    let plan = stratified_folds(&subjects, 8, 7).unwrap();
    assert_eq!(plan.k(), 8);
    let mut all = BTreeSet::new();
    for fold in &plan.folds {
        assert_eq!(fold.len(), 8);
        let patients = fold.iter().filter(|id| subjects.iter().any(|s| s.0 == **id && s.1 == Label::Patient)).count();
        assert_eq!(patients, 4);
        for id in fold {
            assert!(all.insert(*id));
        }
    }
    assert_eq!(all.len(), 64);
    assert_eq!(plan, stratified_folds(&subjects, 8, 7).unwrap());
    assert_ne!(plan, stratified_folds(&subjects, 8, 8).unwrap());
}

#[test]
fn ten_subjects_in_five_folds() {
    let subjects = balanced(10, 5);
    let plan = stratified_folds(&subjects, 5, 1).unwrap();
    for fold in &plan.folds {
        let patients = fold.iter().filter(|id| subjects.iter().any(|s| s.0 == **id && s.1 == Label::Patient)).count();
        assert_eq!((fold.len(), patients), (2, 1));
    }
}

#[test]
fn uneven_classes_stay_within_one_of_perfect() {
    for (n, p, k) in [(13, 5, 4), (20, 7, 3), (9, 9, 2), (31, 16, 8)] {
        let subjects = balanced(n, p);
        let plan = stratified_folds(&subjects, k, 3).unwrap();
        let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let per_class: Vec<usize> = plan
            .folds
            .iter()
            .map(|f| f.iter().filter(|id| subjects.iter().any(|s| s.0 == **id && s.1 == Label::Patient)).count())
            .collect();
        let ideal = p as f64 / k as f64;
        assert!(per_class.iter().all(|&c| (c as f64 - ideal).abs() < 1.0));
    }
}

#[test]
fn too_many_folds_is_an_error() {
    assert!(matches!(
        stratified_folds(&balanced(6, 3), 7, 0),
        Err(CoreError::TooManyFolds { k: 7, subjects: 6 })
    ));
    assert!(stratified_folds(&balanced(6, 3), 1, 0).is_err());
    let mut dup = balanced(6, 3);
    dup[5].0 = dup[0].0;
    assert!(stratified_folds(&dup, 2, 0).is_err());
}

#[test]
fn trials_keep_roles_disjoint_and_test_each_subject_once() {
    let subjects = balanced(64, 32);
    let plan = stratified_folds(&subjects, 8, 7).unwrap();
    let mut tested = BTreeSet::new();
    for fold in 0..8 {
        let trial = plan.trial(fold, 0.1, 7);
        trial.check_disjoint().unwrap();
        assert_eq!(trial.test.len() + trial.validation.len() + trial.train.len(), 64);
        assert_eq!(trial.validation.len(), 6);
        let val_patients = trial
            .validation
            .iter()
            .filter(|id| subjects.iter().any(|s| s.0 == **id && s.1 == Label::Patient))
            .count();
        assert_eq!(val_patients, 3);
        for id in &trial.test {
            assert!(tested.insert(*id));
        }
    }
    assert_eq!(tested.len(), 64);

    let mut bad = plan.trial(0, 0.1, 7);
    bad.train.push(bad.test[0]);
    assert!(matches!(bad.check_disjoint(), Err(CoreError::Leakage { fold: 0, .. })));
}

#[test]
fn threshold_examples() {
    assert_eq!(aggregate_subject(1, &votes(5, 10), 0.45).unwrap().prediction, Label::Patient);
    assert_eq!(aggregate_subject(1, &votes(4, 10), 0.45).unwrap().prediction, Label::Control);
    let boundary = aggregate_subject(1, &votes(9, 20), 0.45).unwrap();
    assert_eq!((boundary.p, boundary.t, boundary.prediction), (9, 20, Label::Patient));
    assert!(matches!(aggregate_subject(1, &[], 0.45), Err(CoreError::EmptyPredictions)));
}

/// Exact rational comparison `p / t >= 45 / 100`.
fn reaches_threshold(p: usize, t: usize) -> bool {
    100 * p >= 45 * t
}

#[test]
fn aggregation_matches_exact_rational_rule_and_is_monotone() {
    for t in 1..=30 {
        let mut was_patient = false;
        for p in 0..=t {
            let agg = aggregate_subject(0, &votes(p, t), 0.45).unwrap();
            let patient = agg.prediction == Label::Patient;
            assert_eq!(patient, reaches_threshold(p, t), "p={p} t={t}");
            assert!(!was_patient || patient, "flipped back at p={p} t={t}");
            was_patient = patient;
            for scale in 2..=4 {
                let scaled = aggregate_subject(0, &votes(p * scale, t * scale), 0.45).unwrap();
                assert_eq!(scaled.prediction, agg.prediction);
            }
        }
    }
}

#[test]
fn reference_confusion_counts() {
    let m = ConfusionMatrix::new(26, 6, 7, 25).metrics();
    assert_eq!(
        (m.accuracy.percent, m.sensitivity.percent, m.specificity.percent),
        (Some(80), Some(81), Some(78))
    );
    let perfect = ConfusionMatrix::new(4, 0, 0, 4).metrics();
    assert_eq!(perfect.accuracy.percent, Some(100));
    assert_eq!(perfect.sensitivity.value, Some(1.0));
    assert_eq!(perfect.specificity.value, Some(1.0));
}

#[test]
fn half_up_rounding_matches_exact_arithmetic() {
    for den in 1..=80u32 {
        for num in 0..=den {
            let exact = 100.0 * num as f64 / den as f64;
            let floor = exact.floor();
            let expected = if (exact - floor - 0.5).abs() < 1e-9 || exact - floor > 0.5 { floor + 1.0 } else { floor };
            assert_eq!(percent_half_up(num, den), expected as u32, "{num}/{den}");
        }
    }
}

#[test]
fn compute_metrics_counts_pairs() {
    let pairs = [
        (Label::Patient, Label::Patient),
        (Label::Patient, Label::Control),
        (Label::Control, Label::Patient),
        (Label::Control, Label::Control),
        (Label::Control, Label::Control),
    ];
    assert_eq!(compute_metrics(&pairs).unwrap(), ConfusionMatrix::new(1, 1, 1, 2));
    assert!(compute_metrics(&[]).is_err());
}

fn small_cohort(seed: u64, ratio: f64) -> SyntheticCohort {
    let mut spec = CohortSpec {
        n_subjects: 16,
        n_patients: 8,
        duration_s: 30.0,
        seed,
        ..CohortSpec::default()
    };
    spec.effect.energy_ratio = ratio;
    SyntheticCohort::new(spec, ElectrodeLayout::default_layout()).unwrap()
}

fn small_config(classifier: ClassifierKind) -> PipelineConfig {
    let mut config = PipelineConfig {
        model: FeatureModel::Concat,
        classifier,
        folds: 4,
        validation_fraction: 0.2,
        ..PipelineConfig::default()
    };
    config.features.window_stride = 2560;
    config
}

fn features(seed: u64, ratio: f64, config: &PipelineConfig) -> FeatureSet {
    extract_features(&small_cohort(seed, ratio), &config.features).unwrap()
}

/// Standardize with training statistics, sort every training window by
/// distance, vote among the first `k`, then apply the subject threshold.
fn knn_reference(features: &FeatureSet, config: &PipelineConfig) -> Vec<(u32, Label)> {
    let labelled: Vec<(u32, Label)> = features.subjects().iter().map(|s| (s.subject_id, s.label)).collect();
    let plan = stratified_folds(&labelled, config.folds, config.seed).unwrap();
    let mut out = Vec::new();
    for fold in 0..plan.k() {
        let trial = plan.trial(fold, config.validation_fraction, config.seed);
        let train: Vec<(&Vec<f64>, Label)> = features
            .matrices
            .iter()
            .filter(|m| trial.train.contains(&m.subject_id))
            .map(|m| (&m.values, m.label))
            .collect();
        let dim = train[0].0.len();
        let n = train.len() as f64;
        let mean: Vec<f64> = (0..dim).map(|j| train.iter().map(|(x, _)| x[j]).sum::<f64>() / n).collect();
        let std: Vec<f64> = (0..dim)
            .map(|j| (train.iter().map(|(x, _)| (x[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt().max(1e-8))
            .collect();
        let scale = |x: &[f64]| -> Vec<f64> { (0..dim).map(|j| (x[j] - mean[j]) / std[j]).collect() };
        let train_scaled: Vec<(Vec<f64>, Label)> = train.iter().map(|(x, l)| (scale(x), *l)).collect();
        for &id in &trial.test {
            let mut p = 0;
            let mut t = 0;
            for m in features.matrices.iter().filter(|m| m.subject_id == id) {
                let q = scale(&m.values);
                let mut dists: Vec<(f64, usize)> = train_scaled
                    .iter()
                    .enumerate()
                    .map(|(i, (x, _))| (x.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
                    .collect();
                dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let positive = dists[..config.knn.k].iter().filter(|(_, i)| train_scaled[*i].1 == Label::Patient).count();
                if 2 * positive > config.knn.k {
                    p += 1;
                }
                t += 1;
            }
            let label = if reaches_threshold(p, t) { Label::Patient } else { Label::Control };
            out.push((id, label));
        }
    }
    out.sort();
    out
}

#[test]
fn knn_pipeline_matches_brute_force_reference() {
    for k in [1, 3, 5] {
        let mut config = small_config(ClassifierKind::Knn);
        config.knn.k = k;
        let feats = features(11, 1.4, &config);
        let report = run_with_features(&feats, &ElectrodeLayout::default_layout(), &config).unwrap();
        let got: Vec<(u32, Label)> = report.subjects.iter().map(|s| (s.subject_id, s.predicted)).collect();
        assert_eq!(got, knn_reference(&feats, &config), "k={k}");
        assert_eq!(report.pooled.total(), 16);
    }
}

#[test]
fn trial_data_is_standardized_on_training_windows() {
    let config = small_config(ClassifierKind::Knn);
    let feats = features(5, 3.0, &config);
    let tensors = tensorize_all(&feats, &ElectrodeLayout::default_layout(), &config).unwrap();
    let labelled: Vec<(u32, Label)> = feats.subjects().iter().map(|s| (s.subject_id, s.label)).collect();
    let plan = stratified_folds(&labelled, 4, 7).unwrap();
    let trial = plan.trial(1, 0.2, 7);
    let data = build_trial_data(&feats, &tensors, &trial).unwrap();
    assert_eq!(data.train.len() + data.validation.len() + data.test.len(), feats.matrices.len());
    for j in [0, 11, 169] {
        let col: Vec<f64> = data.train.samples().map(|x| x[j]).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        assert!(mean.abs() < 1e-9);
    }
    assert!(data.test.subjects().iter().all(|s| trial.test.contains(s)));
    assert!(data.validation.subjects().iter().all(|s| trial.validation.contains(s)));
}

#[test]
fn reports_are_deterministic_and_complete() {
    let layout = ElectrodeLayout::default_layout();
    for model in [FeatureModel::Concat, FeatureModel::Grid] {
        let mut config = small_config(ClassifierKind::Knn);
        config.model = model;
        let a = run_with_features(&features(3, 3.0, &config), &layout, &config).unwrap();
        let b = run_with_features(&features(3, 3.0, &config), &layout, &config).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.subjects_csv().unwrap(), b.subjects_csv().unwrap());
        assert_eq!(render_report(&a), render_report(&b));
        assert_eq!(a.pooled.total(), 16);
        assert_eq!(a.subjects.len(), 16);
        assert_eq!(a.trials.len(), 4);
        let tested: usize = a.trials.iter().map(|t| t.test_subjects.len()).sum();
        assert_eq!(tested, 16);
        assert_eq!(a.interpolation.is_some(), model == FeatureModel::Grid);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        a.write_json(&path).unwrap();
        assert_eq!(ExperimentReport::read_json(&path).unwrap(), a);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), a.to_json());
    }
}

#[test]
fn subjects_csv_has_one_row_per_subject() {
    let config = small_config(ClassifierKind::Knn);
    let report = run_with_features(&features(3, 3.0, &config), &ElectrodeLayout::default_layout(), &config).unwrap();
    let csv = String::from_utf8(report.subjects_csv().unwrap()).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "subject_id,actual,p,t,x,predicted,fold");
    assert_eq!(lines.count(), 16);
}

#[test]
fn svm_and_cnn_runs_complete_on_a_small_cohort() {
    let layout = ElectrodeLayout::default_layout();
    let mut config = small_config(ClassifierKind::Svm);
    config.svm.gamma = Some(1.0 / 170.0);
    let feats = features(4, 3.0, &config);
    let svm = run_with_features(&feats, &layout, &config).unwrap();
    assert_eq!(svm.pooled.total(), 16);
    assert!(svm.accuracy() >= 0.75, "svm accuracy {}", svm.accuracy());

    config.classifier = ClassifierKind::Cnn;
    config.cnn.max_epochs = 2;
    config.cnn.patience = 1;
    let cnn = run_with_features(&feats, &layout, &config).unwrap();
    assert_eq!(cnn.pooled.total(), 16);
    assert!(cnn.trials.iter().all(|t| t.training.is_some()));
}

#[test]
fn invalid_configs_are_rejected_before_running() {
    let config = small_config(ClassifierKind::Knn);
    let feats = features(3, 3.0, &config);
    let layout = ElectrodeLayout::default_layout();
    let mut bad = config.clone();
    bad.folds = 17;
    assert!(matches!(run_with_features(&feats, &layout, &bad), Err(CoreError::TooManyFolds { .. })));
    let mut bad = config.clone();
    bad.subject_threshold = 1.0;
    assert!(run_with_features(&feats, &layout, &bad).is_err());
}
