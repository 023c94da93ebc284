//! Getting recordings into memory: CSV files listed in a manifest, or a
//! seeded synthetic cohort generated on demand.

pub mod csv_io;
pub mod manifest;
pub mod synthetic;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::recording::{Label, Recording};

pub use csv_io::{load_recording, write_recording};
pub use manifest::{Manifest, ManifestCohort, ManifestEntry};
pub use synthetic::{generate_synthetic_cohort, CohortSpec, EffectSpec, NoiseModel, SyntheticCohort};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectInfo {
    pub subject_id: u32,
    pub label: Label,
}

/// A cohort whose recordings are produced one at a time, so that only the
/// subjects currently being processed need to be held in memory.
pub trait CohortSource: Send + Sync {
    fn subjects(&self) -> &[SubjectInfo];

    fn fs_hz(&self) -> f64;

    /// Loads (or generates) the recording of the `index`-th subject.
    fn load(&self, index: usize) -> Result<Recording>;

    /// Stable description of the cohort contents, used to key caches.
    fn identity(&self) -> String;

    fn len(&self) -> usize {
        self.subjects().len()
    }

    fn is_empty(&self) -> bool {
        self.subjects().is_empty()
    }
}

/// Recordings already in memory.
pub struct InMemoryCohort {
    subjects: Vec<SubjectInfo>,
    recordings: Vec<Recording>,
    fs_hz: f64,
}

impl InMemoryCohort {
    pub fn new(recordings: Vec<Recording>) -> Result<Self> {
        let fs_hz = recordings
            .first()
            .map(|r| r.fs_hz)
            .ok_or_else(|| CoreError::InvalidCohort("no recordings".into()))?;
        let mut seen = std::collections::BTreeSet::new();
        for r in &recordings {
            if r.fs_hz != fs_hz {
                return Err(CoreError::SamplingRate {
                    expected: fs_hz,
                    got: r.fs_hz,
                });
            }
            if !seen.insert(r.subject_id) {
                return Err(CoreError::InvalidCohort(format!(
                    "subject {} appears twice",
                    r.subject_id
                )));
            }
        }
        Ok(Self {
            subjects: recordings
                .iter()
                .map(|r| SubjectInfo {
                    subject_id: r.subject_id,
                    label: r.label,
                })
                .collect(),
            recordings,
            fs_hz,
        })
    }
}

impl CohortSource for InMemoryCohort {
    fn subjects(&self) -> &[SubjectInfo] {
        &self.subjects
    }

    fn fs_hz(&self) -> f64 {
        self.fs_hz
    }

    fn load(&self, index: usize) -> Result<Recording> {
        Ok(self.recordings[index].clone())
    }

    fn identity(&self) -> String {
        let mut hasher_input = Vec::new();
        for r in &self.recordings {
            hasher_input.push(format!("{}:{}:{}", r.subject_id, r.label, r.len()));
            let checksum: f64 = r.channels.iter().flatten().sum();
            hasher_input.push(format!("{checksum:e}"));
        }
        crate::config::sha256_json(&hasher_input)
    }
}
