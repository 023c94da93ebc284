use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{cast, Pass};
use super::network::Network;
use super::Scalar;
use crate::dataset::Dataset;
use crate::error::{LearnError, Result};

/// Arithmetic used by the network during training and inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

/// Minibatch Adam on mean cross-entropy, with early stopping on
/// validation loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Consecutive non-improving epochs tolerated before stopping. Zero
    /// stops at the first non-improving epoch.
    pub patience: usize,
    /// Improvement smaller than this does not reset patience.
    pub min_delta: f64,
    pub precision: Precision,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            max_epochs: 100,
            patience: 8,
            min_delta: 0.0,
            precision: Precision::F32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(LearnError::InvalidConfig(m));
        if self.batch_size == 0 {
            return fail("batch size must be at least 1".into());
        }
        if self.max_epochs == 0 {
            return fail("max_epochs must be at least 1".into());
        }
        if self.patience >= self.max_epochs {
            return fail(format!(
                "patience {} must be below max_epochs {}",
                self.patience, self.max_epochs
            ));
        }
        if !(self.learning_rate > 0.0) {
            return fail("learning rate must be > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean minibatch loss during the epoch (dropout active).
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose weights were restored.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

struct Adam<F> {
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
    step: i32,
}

impl<F: Scalar> Adam<F> {
    fn new(net: &mut Network<F>) -> Self {
        let mut m = Vec::new();
        net.visit_params(|value, _| m.push(vec![F::zero(); value.len()]));
        let v = m.clone();
        Self { m, v, step: 0 }
    }

    fn update(&mut self, net: &mut Network<F>, cfg: &TrainConfig) {
        self.step += 1;
        let (b1, b2): (F, F) = (cast(cfg.beta1), cast(cfg.beta2));
        let one = F::one();
        let correction1 = 1.0 - cfg.beta1.powi(self.step);
        let correction2 = 1.0 - cfg.beta2.powi(self.step);
        let lr: F = cast(cfg.learning_rate * correction2.sqrt() / correction1);
        let eps: F = cast(cfg.epsilon * correction2.sqrt());
        let mut slot = 0;
        let (ms, vs) = (&mut self.m, &mut self.v);
        net.visit_params(|value, grad| {
            let (m, v) = (&mut ms[slot], &mut vs[slot]);
            for (((w, &g), m), v) in value.iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                *w -= lr * *m / (v.sqrt() + eps);
            }
            slot += 1;
        });
    }
}

/// Trains in place and leaves the network holding the weights of the epoch
/// with the lowest validation loss.
pub fn cnn_train<F: Scalar>(
    net: &mut Network<F>,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    if val.is_empty() {
        return Err(LearnError::EmptyValidationSet);
    }
    let train_subjects: std::collections::BTreeSet<u32> = train.subjects().iter().copied().collect();
    if let Some(&subject) = val.subjects().iter().find(|s| train_subjects.contains(s)) {
        return Err(LearnError::SubjectOverlap { subject });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(net);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = TrainHistory::default();
    let mut best_loss = f64::INFINITY;
    let mut best = net.clone();
    let mut stale = 0usize;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let x = net.batch(chunk.iter().map(|&i| train.sample(i)))?;
            let labels: Vec<usize> = chunk.iter().map(|&i| train.label(i)).collect();
            let mut pass = Pass {
                batch_stats: true,
                dropout: Some(&mut rng),
                cache: true,
            };
            let (loss, _) = net.loss_and_backward(x, &labels, &mut pass)?;
            if !loss.is_finite() {
                return Err(LearnError::NonFinite {
                    what: "training loss",
                    epoch,
                });
            }
            loss_sum += loss * chunk.len() as f64;
            adam.update(net, cfg);
        }
        let train_loss = loss_sum / train.len() as f64;
        let val_loss = evaluate_loss(net, val, cfg.batch_size.max(64))?;
        if !val_loss.is_finite() {
            return Err(LearnError::NonFinite {
                what: "validation loss",
                epoch,
            });
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });

        if val_loss < best_loss - cfg.min_delta {
            best_loss = val_loss;
            best = net.clone();
            history.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience.max(1) {
                history.stopped_early = true;
                break;
            }
        }
    }
    *net = best;
    Ok(history)
}

/// Mean inference-mode cross-entropy over a dataset.
pub(crate) fn evaluate_loss<F: Scalar>(
    net: &mut Network<F>,
    data: &Dataset,
    batch_size: usize,
) -> Result<f64> {
    let mut total = 0.0;
    let indices: Vec<usize> = (0..data.len()).collect();
    for chunk in indices.chunks(batch_size) {
        let x = net.batch(chunk.iter().map(|&i| data.sample(i)))?;
        let labels: Vec<usize> = chunk.iter().map(|&i| data.label(i)).collect();
        total += net.loss(x, &labels, &mut Pass::inference())? * chunk.len() as f64;
    }
    Ok(total / data.len() as f64)
}
