//! Labelled feature samples and train-only feature standardization.

use serde::{Deserialize, Serialize};

use crate::error::{LearnError, Result};

/// Floor applied to per-feature standard deviations before dividing.
pub const STD_FLOOR: f64 = 1e-8;

/// Height × width × channels of one sample, stored row-major with channels
/// innermost. Flat feature vectors use `1 × len × 1` or any shape whose
/// product matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl SampleShape {
    pub const fn new(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
        }
    }

    pub const fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A homogeneous collection of samples with class labels and the subject
/// each sample came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    shape: SampleShape,
    features: Vec<f64>,
    labels: Vec<usize>,
    subjects: Vec<u32>,
}

impl Dataset {
    pub fn new(shape: SampleShape) -> Self {
        Self {
            shape,
            features: Vec::new(),
            labels: Vec::new(),
            subjects: Vec::new(),
        }
    }

    pub fn with_capacity(shape: SampleShape, samples: usize) -> Self {
        Self {
            shape,
            features: Vec::with_capacity(samples * shape.len()),
            labels: Vec::with_capacity(samples),
            subjects: Vec::with_capacity(samples),
        }
    }

    /// Builds a dataset from a flat row-major feature buffer.
    pub fn from_parts(
        shape: SampleShape,
        features: Vec<f64>,
        labels: Vec<usize>,
        subjects: Vec<u32>,
    ) -> Result<Self> {
        let dim = shape.len();
        if labels.len() != subjects.len() || features.len() != labels.len() * dim {
            return Err(LearnError::ShapeMismatch {
                expected: labels.len() * dim,
                got: features.len(),
            });
        }
        Ok(Self {
            shape,
            features,
            labels,
            subjects,
        })
    }

    pub fn push(&mut self, sample: &[f64], label: usize, subject: u32) -> Result<()> {
        if sample.len() != self.dim() {
            return Err(LearnError::RaggedSamples {
                index: self.len(),
                expected: self.dim(),
                got: sample.len(),
            });
        }
        self.features.extend_from_slice(sample);
        self.labels.push(label);
        self.subjects.push(subject);
        Ok(())
    }

    pub fn shape(&self) -> SampleShape {
        self.shape
    }

    /// Number of features per sample.
    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample(&self, index: usize) -> &[f64] {
        let dim = self.dim();
        &self.features[index * dim..(index + 1) * dim]
    }

    pub fn label(&self, index: usize) -> usize {
        self.labels[index]
    }

    pub fn subject(&self, index: usize) -> u32 {
        self.subjects[index]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn subjects(&self) -> &[u32] {
        &self.subjects
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn samples(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.dim().max(1)).take(self.len())
    }
}

/// Per-feature affine scaling `(x - mean) / max(std, STD_FLOOR)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    /// Population standard deviation (divides by `n`).
    pub std: Vec<f64>,
}

impl Standardization {
    /// Fits mean and population standard deviation on the training samples.
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(LearnError::EmptyTrainingSet);
        }
        let dim = train.dim();
        let n = train.len() as f64;
        let mut mean = vec![0.0; dim];
        for sample in train.samples() {
            for (m, &x) in mean.iter_mut().zip(sample) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);

        let mut var = vec![0.0; dim];
        for sample in train.samples() {
            for ((v, &m), &x) in var.iter_mut().zip(&mean).zip(sample) {
                let d = x - m;
                *v += d * d;
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply_sample(&self, sample: &mut [f64]) {
        for ((x, &m), &s) in sample.iter_mut().zip(&self.mean).zip(&self.std) {
            *x = (*x - m) / s.max(STD_FLOOR);
        }
    }

    pub fn apply(&self, data: &mut Dataset) -> Result<()> {
        if data.dim() != self.dim() {
            return Err(LearnError::ShapeMismatch {
                expected: self.dim(),
                got: data.dim(),
            });
        }
        let dim = self.dim();
        if dim == 0 {
            return Ok(());
        }
        for sample in data.features.chunks_exact_mut(dim) {
            self.apply_sample(sample);
        }
        Ok(())
    }
}
