use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::recording::Label;

/// Disjoint subject sets covering a cohort, each preserving the class mix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Vec<u32>>,
    labels: Vec<(u32, Label)>,
}

/// Subject roles for one trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub fold: usize,
    pub test: Vec<u32>,
    pub validation: Vec<u32>,
    pub train: Vec<u32>,
}

/// Shuffles each class with the seed and deals it round-robin into `k`
/// folds. The dealing position carries over from one class to the next, so
/// fold sizes differ by at most one overall as well as per class.
pub fn stratified_folds(subjects: &[(u32, Label)], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > subjects.len() {
        return Err(CoreError::TooManyFolds {
            k,
            subjects: subjects.len(),
        });
    }
    let mut ids = BTreeSet::new();
    for &(id, _) in subjects {
        if !ids.insert(id) {
            return Err(CoreError::InvalidCohort(format!("subject {id} listed twice")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for label in [Label::Control, Label::Patient] {
        let mut members: Vec<u32> = subjects
            .iter()
            .filter(|(_, l)| *l == label)
            .map(|&(id, _)| id)
            .collect();
        members.sort_unstable();
        members.shuffle(&mut rng);
        for id in members {
            folds[next % k].push(id);
            next += 1;
        }
    }
    Ok(FoldPlan {
        folds,
        labels: subjects.to_vec(),
    })
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    fn label_of(&self, id: u32) -> Label {
        self.labels
            .iter()
            .find(|(s, _)| *s == id)
            .map(|&(_, l)| l)
            .expect("fold members come from the labelled list")
    }

    /// Trial `fold` tests on that fold and holds out `round(fraction · n_c)`
    /// subjects of each class `c` among the rest for validation (at least
    /// one when the class has two or more remaining subjects).
    pub fn trial(&self, fold: usize, validation_fraction: f64, seed: u64) -> Trial {
        let test = self.folds[fold].clone();
        let test_set: BTreeSet<u32> = test.iter().copied().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(fold as u64 + 1);
        let (mut validation, mut train) = (Vec::new(), Vec::new());
        for label in [Label::Control, Label::Patient] {
            let mut pool: Vec<u32> = self
                .folds
                .iter()
                .flatten()
                .copied()
                .filter(|id| !test_set.contains(id) && self.label_of(*id) == label)
                .collect();
            pool.sort_unstable();
            pool.shuffle(&mut rng);
            let mut take = (validation_fraction * pool.len() as f64).round() as usize;
            if take == 0 && pool.len() >= 2 {
                take = 1;
            }
            let take = take.min(pool.len().saturating_sub(1));
            validation.extend_from_slice(&pool[..take]);
            train.extend_from_slice(&pool[take..]);
        }
        validation.sort_unstable();
        train.sort_unstable();
        let mut test = test;
        test.sort_unstable();
        Trial {
            fold,
            test,
            validation,
            train,
        }
    }
}

impl Trial {
    /// Errors if any subject holds two roles.
    pub fn check_disjoint(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &id in self.test.iter().chain(&self.validation).chain(&self.train) {
            if !seen.insert(id) {
                return Err(CoreError::Leakage {
                    fold: self.fold,
                    subject: id,
                });
            }
        }
        Ok(())
    }
}
