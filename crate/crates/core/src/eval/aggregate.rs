use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::recording::Label;

/// Window votes of one subject reduced to a single prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectAggregate {
    pub subject_id: u32,
    /// Windows classified as patient.
    pub p: u32,
    /// Windows classified.
    pub t: u32,
    /// `p / t`.
    pub x: f64,
    pub threshold: f64,
    pub prediction: Label,
}

/// Patient iff the fraction of positive windows reaches the threshold
/// (inclusive).
pub fn aggregate_subject(subject_id: u32, window_predictions: &[Label], threshold: f64) -> Result<SubjectAggregate> {
    if window_predictions.is_empty() {
        return Err(CoreError::EmptyPredictions);
    }
    let t = window_predictions.len() as u32;
    let p = window_predictions.iter().filter(|&&l| l == Label::Patient).count() as u32;
    Ok(from_counts(subject_id, p, t, threshold))
}

pub(crate) fn from_counts(subject_id: u32, p: u32, t: u32, threshold: f64) -> SubjectAggregate {
    let x = p as f64 / t as f64;
    let patient = x >= threshold || p as f64 >= threshold * t as f64;
    SubjectAggregate {
        subject_id,
        p,
        t,
        x,
        threshold,
        prediction: if patient { Label::Patient } else { Label::Control },
    }
}
