use std::collections::BTreeMap;

use rayon::prelude::*;
use topoeeg_learn::cnn::Scalar;
use topoeeg_learn::{
    cnn_train, svm_fit, CnnArchitecture, Dataset, KnnClassifier, Network, Precision, SampleShape,
    Standardization, TrainConfig,
};

use crate::config::{sha256_json, ClassifierKind, FeatureConfig, FeatureModel, PipelineConfig};
use crate::dsp::{BandEnergyMatrix, Featurizer};
use crate::error::{CoreError, Result};
use crate::eval::aggregate::{aggregate_subject, SubjectAggregate};
use crate::eval::folds::{stratified_folds, FoldPlan, Trial};
use crate::eval::metrics::ConfusionMatrix;
use crate::eval::report::{
    CohortSummary, ExperimentReport, InterpSummary, MetricRow, SubjectOutcome, TrainingSummary,
    TrialReport,
};
use crate::ingest::{CohortSource, SubjectInfo};
use crate::layout::ElectrodeLayout;
use crate::recording::Label;
use crate::tensorize::InterpolationPlan;

/// Energy matrices of every window of every subject, in subject order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    /// Hash of the feature configuration and the cohort contents.
    pub fingerprint: String,
    pub matrices: Vec<BandEnergyMatrix>,
}

impl FeatureSet {
    pub fn subjects(&self) -> Vec<SubjectInfo> {
        let mut seen: BTreeMap<u32, Label> = BTreeMap::new();
        let mut order = Vec::new();
        for m in &self.matrices {
            if seen.insert(m.subject_id, m.label).is_none() {
                order.push(SubjectInfo {
                    subject_id: m.subject_id,
                    label: m.label,
                });
            }
        }
        order
    }
}

pub fn feature_fingerprint(source: &dyn CohortSource, config: &FeatureConfig) -> String {
    sha256_json(&(config.fingerprint(), source.identity(), source.fs_hz()))
}

/// Featurizes every subject, loading one recording at a time per worker.
pub fn extract_features(source: &dyn CohortSource, config: &FeatureConfig) -> Result<FeatureSet> {
    let featurizer = Featurizer::new(config, source.fs_hz())?;
    let per_subject: Vec<Vec<BandEnergyMatrix>> = (0..source.len())
        .into_par_iter()
        .map(|i| {
            let recording = source.load(i)?;
            featurizer.featurize(&recording)
        })
        .collect::<Result<_>>()?;
    Ok(FeatureSet {
        fingerprint: feature_fingerprint(source, config),
        matrices: per_subject.into_iter().flatten().collect(),
    })
}

/// Classifier inputs for every window, in feature-set order.
pub struct Tensorized {
    pub shape: SampleShape,
    pub samples: Vec<Vec<f64>>,
    pub clamped: usize,
}

pub fn tensorize_all(features: &FeatureSet, layout: &ElectrodeLayout, config: &PipelineConfig) -> Result<Tensorized> {
    let bands = config.features.bands.len();
    match config.model {
        FeatureModel::Concat => Ok(Tensorized {
            shape: SampleShape::new(layout.len(), bands, 1),
            samples: features.matrices.iter().map(|m| m.values.clone()).collect(),
            clamped: 0,
        }),
        FeatureModel::Grid => {
            let plan = InterpolationPlan::for_layout(layout, config.interp_method, config.d_max)?;
            let mut clamped = 0;
            let samples = features
                .matrices
                .iter()
                .map(|m| {
                    if m.channels != layout.len() {
                        return Err(CoreError::InvalidConfig(format!(
                            "features have {} channels, layout has {}",
                            m.channels,
                            layout.len()
                        )));
                    }
                    let g = plan.grid(m);
                    clamped += g.clamped;
                    Ok(g.tensor)
                })
                .collect::<Result<_>>()?;
            Ok(Tensorized {
                shape: SampleShape::new(layout.grid_height(), layout.grid_width(), bands),
                samples,
                clamped,
            })
        }
    }
}

/// Standardized train/validation/test datasets of one trial.
pub struct TrialData {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub standardization: Standardization,
}

/// Splits windows by subject role and standardizes all three sets with
/// statistics fitted on the training windows alone.
pub fn build_trial_data(features: &FeatureSet, tensors: &Tensorized, trial: &Trial) -> Result<TrialData> {
    trial.check_disjoint()?;
    let role = |ids: &[u32], id: u32| ids.binary_search(&id).is_ok();
    let mut train = Dataset::new(tensors.shape);
    let mut validation = Dataset::new(tensors.shape);
    let mut test = Dataset::new(tensors.shape);
    for (m, x) in features.matrices.iter().zip(&tensors.samples) {
        let id = m.subject_id;
        let target = if role(&trial.train, id) {
            &mut train
        } else if role(&trial.validation, id) {
            &mut validation
        } else if role(&trial.test, id) {
            &mut test
        } else {
            continue;
        };
        target.push(x, m.label.class(), id)?;
    }
    let standardization = Standardization::fit(&train)?;
    standardization.apply(&mut train)?;
    standardization.apply(&mut validation)?;
    standardization.apply(&mut test)?;
    Ok(TrialData {
        train,
        validation,
        test,
        standardization,
    })
}

/// Independent, reproducible per-trial seed.
pub fn trial_seed(seed: u64, fold: usize) -> u64 {
    let mut z = seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_experiment(source: &dyn CohortSource, layout: &ElectrodeLayout, config: &PipelineConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let features = extract_features(source, &config.features)?;
    run_with_features(&features, layout, config)
}

/// Cross-validates on precomputed features. Identical inputs give
/// identical reports regardless of thread count.
pub fn run_with_features(features: &FeatureSet, layout: &ElectrodeLayout, config: &PipelineConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let subjects = features.subjects();
    let labelled: Vec<(u32, Label)> = subjects.iter().map(|s| (s.subject_id, s.label)).collect();
    let plan = stratified_folds(&labelled, config.folds, config.seed)?;
    let tensors = tensorize_all(features, layout, config)?;

    let trials: Vec<(TrialReport, Vec<SubjectOutcome>)> = (0..plan.k())
        .into_par_iter()
        .map(|fold| {
            run_trial(&plan, fold, features, &tensors, config).map_err(|e| CoreError::Trial {
                fold,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut seen_in_test = BTreeMap::new();
    let mut pooled = ConfusionMatrix::default();
    let mut outcomes = Vec::new();
    let mut trial_reports = Vec::new();
    for (report, subject_outcomes) in trials {
        pooled.merge(&report.confusion);
        for o in &subject_outcomes {
            if seen_in_test.insert(o.subject_id, o.fold).is_some() {
                return Err(CoreError::Leakage {
                    fold: o.fold,
                    subject: o.subject_id,
                });
            }
        }
        outcomes.extend(subject_outcomes);
        trial_reports.push(report);
    }
    if pooled.total() as usize != subjects.len() {
        return Err(CoreError::InvalidCohort(format!(
            "pooled counts cover {} of {} subjects",
            pooled.total(),
            subjects.len()
        )));
    }
    outcomes.sort_by_key(|o| o.subject_id);

    let interpolation = (config.model == FeatureModel::Grid).then(|| InterpSummary {
        method: config.interp_method,
        description: config.interp_method.description().to_string(),
        d_max: config.d_max,
        clamped_values: tensors.clamped,
    });
    let metrics = pooled.metrics();
    Ok(ExperimentReport {
        fingerprint: config.fingerprint(),
        seed: config.seed,
        config: config.clone(),
        cohort: CohortSummary {
            subjects: subjects.len(),
            patients: subjects.iter().filter(|s| s.label == Label::Patient).count(),
            controls: subjects.iter().filter(|s| s.label == Label::Control).count(),
            windows: features.matrices.len(),
            feature_fingerprint: features.fingerprint.clone(),
        },
        bands_descending: config
            .features
            .bands
            .descending()
            .iter()
            .map(|b| b.name.to_string())
            .collect(),
        interpolation,
        folds: plan.folds.clone(),
        trials: trial_reports,
        pooled,
        metrics,
        table: vec![MetricRow::new(config, &pooled)],
        subjects: outcomes,
    })
}

fn run_trial(
    plan: &FoldPlan,
    fold: usize,
    features: &FeatureSet,
    tensors: &Tensorized,
    config: &PipelineConfig,
) -> Result<(TrialReport, Vec<SubjectOutcome>)> {
    let trial = plan.trial(fold, config.validation_fraction, config.seed);
    let data = build_trial_data(features, tensors, &trial)?;
    if data.train.is_empty() {
        return Err(topoeeg_learn::LearnError::EmptyTrainingSet.into());
    }
    let seed = trial_seed(config.seed, fold);

    let mut training = None;
    let predictions: Vec<usize> = match config.classifier {
        ClassifierKind::Knn => {
            let knn = KnnClassifier::fit(data.train.clone(), config.knn)?;
            knn.predict_many(data.test.samples())?
        }
        ClassifierKind::Svm => {
            let model = svm_fit(&data.train, &config.svm)?;
            training = Some(TrainingSummary::Svm {
                converged: model.converged,
                iterations: model.iterations,
                support_vectors: model.support_vector_count(),
            });
            data.test
                .samples()
                .map(|x| model.predict(x))
                .collect::<topoeeg_learn::Result<_>>()?
        }
        ClassifierKind::Cnn => {
            let cnn = TrainConfig { seed, ..config.cnn };
            let (preds, summary) = match cnn.precision {
                Precision::F32 => train_cnn::<f32>(&data, &cnn, seed)?,
                Precision::F64 => train_cnn::<f64>(&data, &cnn, seed)?,
            };
            training = Some(summary);
            preds
        }
    };

    let mut per_subject: BTreeMap<u32, (Label, Vec<Label>)> = BTreeMap::new();
    for (i, &pred) in predictions.iter().enumerate() {
        let actual = Label::from_class(data.test.label(i)).expect("binary labels");
        let predicted = Label::from_class(pred).expect("binary predictions");
        per_subject
            .entry(data.test.subject(i))
            .or_insert_with(|| (actual, Vec::new()))
            .1
            .push(predicted);
    }
    let mut confusion = ConfusionMatrix::default();
    let mut outcomes = Vec::new();
    for &id in &trial.test {
        let (actual, votes) = per_subject.get(&id).ok_or_else(|| {
            CoreError::InvalidCohort(format!("test subject {id} has no windows"))
        })?;
        let agg: SubjectAggregate = aggregate_subject(id, votes, config.subject_threshold)?;
        confusion.record(*actual, agg.prediction);
        outcomes.push(SubjectOutcome {
            subject_id: id,
            actual: *actual,
            p: agg.p,
            t: agg.t,
            x: agg.x,
            predicted: agg.prediction,
            fold,
        });
    }
    let report = TrialReport {
        fold,
        test_subjects: trial.test.clone(),
        validation_subjects: trial.validation.clone(),
        train_subjects: trial.train.len(),
        windows: [data.train.len(), data.validation.len(), data.test.len()],
        confusion,
        metrics: confusion.metrics(),
        training,
    };
    Ok((report, outcomes))
}

fn train_cnn<F: Scalar>(data: &TrialData, cfg: &TrainConfig, seed: u64) -> Result<(Vec<usize>, TrainingSummary)> {
    let arch = CnnArchitecture::standard(data.train.shape());
    let mut net = Network::<F>::init(arch, seed)?;
    let history = cnn_train(&mut net, &data.train, &data.validation, cfg)?;
    let probs = net.predict_proba_batch(data.test.samples())?;
    let preds = probs.iter().map(|p| usize::from(p[1] > p[0])).collect();
    let best = &history.epochs[history.best_epoch];
    Ok((
        preds,
        TrainingSummary::Cnn {
            epochs: history.epochs.len(),
            best_epoch: history.best_epoch,
            best_val_loss: best.val_loss,
            stopped_early: history.stopped_early,
        },
    ))
}
