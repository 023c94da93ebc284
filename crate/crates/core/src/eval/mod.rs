//! Subject-level cross-validation: stratified folds, per-subject vote
//! aggregation, confusion metrics and experiment reports.

pub mod aggregate;
pub mod experiment;
pub mod folds;
pub mod metrics;
pub mod report;

pub use aggregate::{aggregate_subject, SubjectAggregate};
pub use experiment::{
    build_trial_data, extract_features, feature_fingerprint, run_experiment, run_with_features,
    tensorize_all, trial_seed, FeatureSet, Tensorized, TrialData,
};
pub use folds::{stratified_folds, FoldPlan, Trial};
pub use metrics::{compute_metrics, percent_half_up, ConfusionMatrix, Metrics, Rate};
pub use report::{render_report, render_table, ExperimentReport, MetricRow, SubjectOutcome};
