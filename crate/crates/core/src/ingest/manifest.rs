use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::fsio::write_atomic;
use crate::ingest::{load_recording, CohortSource, SubjectInfo};
use crate::layout::ElectrodeLayout;
use crate::recording::{Label, Recording};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub subject_id: u32,
    pub label: Label,
    /// Relative to the manifest's directory.
    pub path: PathBuf,
    pub fs_hz: f64,
}

/// CSV listing of a cohort: `subject_id,label,path,fs_hz`, one subject per
/// row.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read(path).map_err(|e| CoreError::io(path, e))?;
        let mut reader = csv::Reader::from_reader(text.as_slice());
        let mut entries = Vec::new();
        for (row, record) in reader.deserialize::<ManifestEntry>().enumerate() {
            let entry = record.map_err(|e| CoreError::Manifest(format!("{} row {}: {e}", path.display(), row + 2)))?;
            entries.push(entry);
        }
        let manifest = Self { entries };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            for e in &self.entries {
                w.serialize(e)?;
            }
            w.flush().map_err(|e| CoreError::io(path.as_ref(), e))?;
        }
        write_atomic(path, &buf)
    }

    fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(CoreError::Manifest("no subjects listed".into()));
        }
        let mut ids = std::collections::BTreeSet::new();
        for e in &self.entries {
            if !ids.insert(e.subject_id) {
                return Err(CoreError::Manifest(format!("subject {} listed twice", e.subject_id)));
            }
            if !(e.fs_hz > 0.0 && e.fs_hz.is_finite()) {
                return Err(CoreError::Manifest(format!(
                    "subject {} has sampling rate {}",
                    e.subject_id, e.fs_hz
                )));
            }
        }
        Ok(())
    }
}

/// Cohort backed by recording files listed in a manifest.
pub struct ManifestCohort {
    root: PathBuf,
    manifest: Manifest,
    subjects: Vec<SubjectInfo>,
    layout: ElectrodeLayout,
    fs_hz: f64,
    identity: String,
}

impl ManifestCohort {
    /// Opens a manifest; every entry must share the expected sampling rate.
    pub fn open(path: impl AsRef<Path>, layout: ElectrodeLayout, fs_hz: f64) -> Result<Self> {
        let path = path.as_ref();
        let manifest = Manifest::read(path)?;
        for e in &manifest.entries {
            if e.fs_hz != fs_hz {
                return Err(CoreError::SamplingRate {
                    expected: fs_hz,
                    got: e.fs_hz,
                });
            }
        }
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut fingerprint = Vec::new();
        for e in &manifest.entries {
            let file = root.join(&e.path);
            let meta = fs::metadata(&file).map_err(|err| CoreError::io(&file, err))?;
            let modified = meta
                .modified()
                .ok()
                .and_then(|t| t.duration_since(std::time::UNIX_EPOCH).ok())
                .map_or(0, |d| d.as_nanos());
            fingerprint.push(format!(
                "{}|{}|{}|{}|{}",
                e.subject_id,
                e.label,
                e.path.display(),
                meta.len(),
                modified
            ));
        }
        fingerprint.push(layout.to_text());
        Ok(Self {
            subjects: manifest
                .entries
                .iter()
                .map(|e| SubjectInfo {
                    subject_id: e.subject_id,
                    label: e.label,
                })
                .collect(),
            identity: crate::config::sha256_json(&fingerprint),
            root,
            manifest,
            layout,
            fs_hz,
        })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }
}

impl CohortSource for ManifestCohort {
    fn subjects(&self) -> &[SubjectInfo] {
        &self.subjects
    }

    fn fs_hz(&self) -> f64 {
        self.fs_hz
    }

    fn load(&self, index: usize) -> Result<Recording> {
        let e = &self.manifest.entries[index];
        load_recording(self.root.join(&e.path), e.subject_id, e.label, e.fs_hz, &self.layout)
    }

    fn identity(&self) -> String {
        self.identity.clone()
    }
}
