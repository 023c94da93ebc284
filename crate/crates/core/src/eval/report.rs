use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{ClassifierKind, FeatureModel, PipelineConfig};
use crate::error::{CoreError, Result};
use crate::eval::metrics::{ConfusionMatrix, Metrics, Rate};
use crate::fsio::write_atomic;
use crate::recording::Label;
use crate::tensorize::InterpMethod;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub subjects: usize,
    pub patients: usize,
    pub controls: usize,
    pub windows: usize,
    pub feature_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpSummary {
    pub method: InterpMethod,
    pub description: String,
    pub d_max: f64,
    /// Grid values raised to zero after negative spline overshoot, summed
    /// over all windows and bands.
    pub clamped_values: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainingSummary {
    Cnn {
        epochs: usize,
        best_epoch: usize,
        best_val_loss: f64,
        stopped_early: bool,
    },
    Svm {
        converged: bool,
        iterations: usize,
        support_vectors: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub fold: usize,
    pub test_subjects: Vec<u32>,
    pub validation_subjects: Vec<u32>,
    pub train_subjects: usize,
    /// Window counts: train, validation, test.
    pub windows: [usize; 3],
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub training: Option<TrainingSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectOutcome {
    pub subject_id: u32,
    pub actual: Label,
    pub p: u32,
    pub t: u32,
    pub x: f64,
    pub predicted: Label,
    pub fold: usize,
}

/// One line of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub model: FeatureModel,
    pub classifier: ClassifierKind,
    pub interp: Option<InterpMethod>,
    pub d_max: Option<f64>,
    pub window_stride: usize,
    pub confusion: ConfusionMatrix,
    pub accuracy: Rate,
    pub sensitivity: Rate,
    pub specificity: Rate,
}

impl MetricRow {
    pub fn new(config: &PipelineConfig, confusion: &ConfusionMatrix) -> Self {
        let grid = config.model == FeatureModel::Grid;
        Self {
            model: config.model,
            classifier: config.classifier,
            interp: grid.then_some(config.interp_method),
            d_max: grid.then_some(config.d_max),
            window_stride: config.features.window_stride,
            confusion: *confusion,
            accuracy: confusion.accuracy(),
            sensitivity: confusion.sensitivity(),
            specificity: confusion.specificity(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub fingerprint: String,
    pub seed: u64,
    pub config: PipelineConfig,
    pub cohort: CohortSummary,
    /// Band names highest frequency first, the order used when energies are
    /// listed for presentation.
    pub bands_descending: Vec<String>,
    pub interpolation: Option<InterpSummary>,
    pub folds: Vec<Vec<u32>>,
    pub trials: Vec<TrialReport>,
    pub pooled: ConfusionMatrix,
    pub metrics: Metrics,
    pub table: Vec<MetricRow>,
    pub subjects: Vec<SubjectOutcome>,
}

impl ExperimentReport {
    pub fn accuracy(&self) -> f64 {
        self.metrics.accuracy.value.unwrap_or(0.0)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| CoreError::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    /// Per-subject outcomes: `subject_id,actual,p,t,x,predicted,fold`.
    pub fn subjects_csv(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            for o in &self.subjects {
                w.serialize(o)?;
            }
            w.flush().map_err(|e| CoreError::io("<memory>", e))?;
        }
        Ok(buf)
    }

    pub fn write_subjects_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, &self.subjects_csv()?)
    }
}

fn pct(rate: &Rate) -> String {
    rate.percent.map_or_else(|| "n/a".to_string(), |p| format!("{p}%"))
}

/// Fixed-width text rendering of comparison rows.
pub fn render_table(rows: &[MetricRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<7} {:<4} {:<19} {:>5} {:>6}  {:>3} {:>3} {:>3} {:>3}  {:>5} {:>5} {:>5}",
        "model", "clf", "interp", "d_max", "stride", "tp", "fn", "fp", "tn", "acc", "sens", "spec"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<7} {:<4} {:<19} {:>5} {:>6}  {:>3} {:>3} {:>3} {:>3}  {:>5} {:>5} {:>5}",
            r.model.name(),
            r.classifier.name(),
            r.interp.map_or("-", |m| m.name()),
            r.d_max.map_or_else(|| "-".to_string(), |d| format!("{d}")),
            r.window_stride,
            r.confusion.tp,
            r.confusion.fn_,
            r.confusion.fp,
            r.confusion.tn,
            pct(&r.accuracy),
            pct(&r.sensitivity),
            pct(&r.specificity),
        );
    }
    out
}

/// Human-readable summary of one report: per-trial and pooled confusion.
pub fn render_report(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "configuration {}", report.fingerprint);
    let _ = writeln!(
        out,
        "cohort: {} subjects ({} patients, {} controls), {} windows",
        report.cohort.subjects, report.cohort.patients, report.cohort.controls, report.cohort.windows
    );
    if let Some(i) = &report.interpolation {
        let _ = writeln!(
            out,
            "interpolation: {} ({}), d_max {}, {} clamped values",
            i.method, i.description, i.d_max, i.clamped_values
        );
    }
    let _ = writeln!(out, "fold  tp fn fp tn   acc");
    for t in &report.trials {
        let c = &t.confusion;
        let _ = writeln!(
            out,
            "{:>4} {:>3} {:>2} {:>2} {:>2} {:>5}",
            t.fold,
            c.tp,
            c.fn_,
            c.fp,
            c.tn,
            pct(&t.metrics.accuracy)
        );
    }
    let _ = writeln!(out);
    out.push_str(&render_table(&report.table));
    out
}
