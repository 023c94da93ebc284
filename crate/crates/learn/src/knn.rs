//! Brute-force k-nearest-neighbour classification.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{LearnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    /// Neighbour count. Odd values avoid vote ties for binary labels.
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { k: 3 }
    }
}

/// Majority vote over the `k` training samples closest in Euclidean distance.
///
/// Distance ties are broken by lower training index; vote ties by the lowest
/// class label.
#[derive(Debug, Clone)]
pub struct KnnClassifier {
    config: KnnConfig,
    train: Dataset,
}

impl KnnClassifier {
    pub fn fit(train: Dataset, config: KnnConfig) -> Result<Self> {
        if config.k == 0 {
            return Err(LearnError::InvalidConfig("k must be at least 1".into()));
        }
        if train.len() < config.k {
            return Err(LearnError::TooFewSamples {
                k: config.k,
                available: train.len(),
            });
        }
        Ok(Self { config, train })
    }

    pub fn config(&self) -> KnnConfig {
        self.config
    }

    /// Indices of the `k` nearest training samples, closest first.
    pub fn neighbors(&self, query: &[f64]) -> Result<Vec<usize>> {
        if query.len() != self.train.dim() {
            return Err(LearnError::ShapeMismatch {
                expected: self.train.dim(),
                got: query.len(),
            });
        }
        let k = self.config.k;
        // (squared distance, index), kept sorted ascending; lexicographic
        // order gives the lower-index tie break for free.
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for (index, sample) in self.train.samples().enumerate() {
            let d = squared_distance(sample, query);
            if best.len() == k && !less(&(d, index), &best[k - 1]) {
                continue;
            }
            let at = best.partition_point(|probe| less(probe, &(d, index)));
            best.insert(at, (d, index));
            best.truncate(k);
        }
        Ok(best.into_iter().map(|(_, i)| i).collect())
    }

    pub fn predict(&self, query: &[f64]) -> Result<usize> {
        let neighbors = self.neighbors(query)?;
        Ok(majority(neighbors.iter().map(|&i| self.train.label(i))))
    }

    pub fn predict_many<'a, I>(&self, queries: I) -> Result<Vec<usize>>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        queries.into_iter().map(|q| self.predict(q)).collect()
    }
}

fn less(a: &(f64, usize), b: &(f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Most frequent label; ties go to the smallest label.
pub(crate) fn majority(labels: impl Iterator<Item = usize>) -> usize {
    let mut counts: Vec<usize> = Vec::new();
    for label in labels {
        if counts.len() <= label {
            counts.resize(label + 1, 0);
        }
        counts[label] += 1;
    }
    let mut winner = 0;
    for (label, &count) in counts.iter().enumerate() {
        if count > counts[winner] {
            winner = label;
        }
    }
    winner
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SampleShape;

    fn points(rows: &[(&[f64], usize)]) -> Dataset {
        let dim = rows[0].0.len();
        let mut d = Dataset::new(SampleShape::new(1, dim, 1));
        for (i, (x, y)) in rows.iter().enumerate() {
            d.push(x, *y, i as u32).unwrap();
        }
        d
    }

    #[test]
    fn coincident_query_with_k1_returns_its_label() {
        let train = points(&[(&[0.0, 0.0], 0), (&[5.0, 5.0], 1), (&[9.0, 0.0], 0)]);
        let knn = KnnClassifier::fit(train, KnnConfig { k: 1 }).unwrap();
        assert_eq!(knn.predict(&[5.0, 5.0]).unwrap(), 1);
    }

    #[test]
    fn majority_of_three() {
        let train = points(&[
            (&[0.0], 1),
            (&[1.0], 1),
            (&[2.0], 0),
            (&[50.0], 0),
            (&[60.0], 0),
        ]);
        let knn = KnnClassifier::fit(train, KnnConfig::default()).unwrap();
        assert_eq!(knn.neighbors(&[0.9]).unwrap(), vec![1, 0, 2]);
        assert_eq!(knn.predict(&[0.9]).unwrap(), 1);
    }

    #[test]
    fn distance_ties_prefer_lower_index() {
        let train = points(&[(&[1.0], 1), (&[-1.0], 0), (&[1.0], 0)]);
        let knn = KnnClassifier::fit(train, KnnConfig { k: 1 }).unwrap();
        assert_eq!(knn.neighbors(&[0.0]).unwrap(), vec![0]);
    }

    #[test]
    fn vote_ties_go_to_class_zero() {
        let train = points(&[(&[0.0], 1), (&[1.0], 0)]);
        let knn = KnnClassifier::fit(train, KnnConfig { k: 2 }).unwrap();
        assert_eq!(knn.predict(&[0.5]).unwrap(), 0);
    }

    #[test]
    fn rejects_fewer_samples_than_k() {
        let train = points(&[(&[0.0], 1), (&[1.0], 0)]);
        assert!(matches!(
            KnnClassifier::fit(train, KnnConfig { k: 3 }),
            Err(LearnError::TooFewSamples { k: 3, available: 2 })
        ));
    }
}
