use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::recording::Label;

/// Subject-level two-class confusion counts, patient = positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u32,
    #[serde(rename = "fn")]
    pub fn_: u32,
    pub fp: u32,
    pub tn: u32,
}

/// A rate as a fraction plus its integer percentage; both absent when the
/// denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub value: Option<f64>,
    pub percent: Option<u32>,
}

impl Rate {
    fn of(num: u32, den: u32) -> Self {
        if den == 0 {
            Rate {
                value: None,
                percent: None,
            }
        } else {
            Rate {
                value: Some(num as f64 / den as f64),
                percent: Some(percent_half_up(num, den)),
            }
        }
    }
}

/// `100 · num / den` rounded half up, in exact integer arithmetic.
pub fn percent_half_up(num: u32, den: u32) -> u32 {
    let (num, den) = (num as u64, den as u64);
    ((200 * num + den) / (2 * den)) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: Rate,
    pub sensitivity: Rate,
    pub specificity: Rate,
}

impl ConfusionMatrix {
    pub fn new(tp: u32, fn_: u32, fp: u32, tn: u32) -> Self {
        Self { tp, fn_, fp, tn }
    }

    pub fn record(&mut self, actual: Label, predicted: Label) {
        match (actual, predicted) {
            (Label::Patient, Label::Patient) => self.tp += 1,
            (Label::Patient, Label::Control) => self.fn_ += 1,
            (Label::Control, Label::Patient) => self.fp += 1,
            (Label::Control, Label::Control) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u32 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fn_ += other.fn_;
        self.fp += other.fp;
        self.tn += other.tn;
    }

    pub fn accuracy(&self) -> Rate {
        Rate::of(self.tp + self.tn, self.total())
    }

    pub fn sensitivity(&self) -> Rate {
        Rate::of(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> Rate {
        Rate::of(self.tn, self.tn + self.fp)
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            accuracy: self.accuracy(),
            sensitivity: self.sensitivity(),
            specificity: self.specificity(),
        }
    }
}

pub fn compute_metrics(per_subject: &[(Label, Label)]) -> Result<ConfusionMatrix> {
    if per_subject.is_empty() {
        return Err(CoreError::EmptyPredictions);
    }
    let mut m = ConfusionMatrix::default();
    for &(actual, predicted) in per_subject {
        m.record(actual, predicted);
    }
    Ok(m)
}
