use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bands::BandSpec;
use crate::config::FeatureConfig;
use crate::dsp::bandpass::Bandpass;
use crate::dsp::window::window_starts;
use crate::dsp::wpt::{band_energies, leaves_for_bands, wpt_decompose_lowest};
use crate::error::{CoreError, Result};
use crate::fsio::write_atomic;
use crate::recording::{Label, Recording};

/// Energies of one window: `channels × bands`, row-major, channels in
/// layout order and bands in ascending frequency order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandEnergyMatrix {
    pub subject_id: u32,
    pub label: Label,
    pub window: usize,
    pub channels: usize,
    pub bands: usize,
    pub values: Vec<f64>,
}

impl BandEnergyMatrix {
    pub fn new(
        subject_id: u32,
        label: Label,
        window: usize,
        channels: usize,
        bands: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != channels * bands {
            return Err(CoreError::InvalidConfig(format!(
                "energy matrix {channels}x{bands} given {} values",
                values.len()
            )));
        }
        Ok(Self {
            subject_id,
            label,
            window,
            channels,
            bands,
            values,
        })
    }

    pub fn get(&self, channel: usize, band: usize) -> f64 {
        self.values[channel * self.bands + band]
    }

    pub fn row(&self, channel: usize) -> &[f64] {
        &self.values[channel * self.bands..(channel + 1) * self.bands]
    }
}

/// Band-pass filter, window and wavelet-packet stages configured once and
/// reused across recordings of the same sampling rate.
pub struct Featurizer {
    config: FeatureConfig,
    fs_hz: f64,
    bandpass: Bandpass,
    leaves: usize,
}

impl Featurizer {
    pub fn new(config: &FeatureConfig, fs_hz: f64) -> Result<Self> {
        config.validate_for_rate(fs_hz)?;
        Ok(Self {
            config: config.clone(),
            fs_hz,
            bandpass: Bandpass::new(config.bandpass_lo_hz, config.bandpass_hi_hz, fs_hz)?,
            leaves: leaves_for_bands(&config.bands, config.wpt_depth, fs_hz),
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    /// Band-pass → windows → per-channel packet decomposition → band
    /// energies; one matrix per window.
    pub fn featurize(&self, recording: &Recording) -> Result<Vec<BandEnergyMatrix>> {
        if recording.fs_hz != self.fs_hz {
            return Err(CoreError::SamplingRate {
                expected: self.fs_hz,
                got: recording.fs_hz,
            });
        }
        let cfg = &self.config;
        let starts = window_starts(recording.len(), cfg.window_size, cfg.window_stride)?;
        let filtered = self.bandpass.apply_all(&recording.channels);
        let n_bands = cfg.bands.len();
        let mut out = Vec::with_capacity(starts.len());
        for (window, &start) in starts.iter().enumerate() {
            let mut values = Vec::with_capacity(filtered.len() * n_bands);
            for channel in &filtered {
                let segment = &channel[start..start + cfg.window_size];
                let spectrum = wpt_decompose_lowest(segment, cfg.wpt_depth, cfg.wavelet, self.leaves)?;
                values.extend(band_energies(&spectrum, &cfg.bands, self.fs_hz)?);
            }
            out.push(BandEnergyMatrix::new(
                recording.subject_id,
                recording.label,
                window,
                filtered.len(),
                n_bands,
                values,
            )?);
        }
        Ok(out)
    }
}

pub fn featurize_recording(recording: &Recording, config: &FeatureConfig) -> Result<Vec<BandEnergyMatrix>> {
    Featurizer::new(config, recording.fs_hz)?.featurize(recording)
}

const DUMP_MARKER: &str = "# topoeeg-features ";

/// Writes one CSV row per window: `subject_id,label,window` followed by the
/// energies in row-major `(channel, band)` order. The first line records
/// the feature-configuration fingerprint.
pub fn write_feature_dump(
    path: impl AsRef<Path>,
    fingerprint: &str,
    channel_names: &[String],
    bands: &BandSpec,
    matrices: &[BandEnergyMatrix],
) -> Result<()> {
    let mut buf = format!("{DUMP_MARKER}{fingerprint}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header = vec!["subject_id".to_string(), "label".into(), "window".into()];
        for ch in channel_names {
            for b in bands.bands() {
                header.push(format!("{ch}_{}", b.name));
            }
        }
        w.write_record(&header)?;
        for m in matrices {
            let mut row = vec![m.subject_id.to_string(), m.label.to_string(), m.window.to_string()];
            row.extend(m.values.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| CoreError::io(path.as_ref(), e))?;
    }
    write_atomic(path, &buf)
}

/// Reads a dump written by [`write_feature_dump`]; returns its fingerprint
/// and matrices.
pub fn read_feature_dump(path: impl AsRef<Path>, bands: usize) -> Result<(String, Vec<BandEnergyMatrix>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CoreError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| CoreError::io(path, e))?;
    let fingerprint = first
        .trim_end()
        .strip_prefix(DUMP_MARKER)
        .ok_or_else(|| CoreError::FeatureCache(format!("{} lacks the dump marker", path.display())))?
        .to_string();
    let mut csv = csv::Reader::from_reader(reader);
    let width = csv.headers()?.len();
    if width < 3 || (width - 3) % bands != 0 {
        return Err(CoreError::FeatureCache(format!(
            "{} has {width} columns, not 3 + channels x {bands}",
            path.display()
        )));
    }
    let channels = (width - 3) / bands;
    let mut matrices = Vec::new();
    for (row, record) in csv.records().enumerate() {
        let record = record?;
        let bad = |what: &str| CoreError::FeatureCache(format!("{} row {}: bad {what}", path.display(), row + 2));
        let subject_id = record[0].parse().map_err(|_| bad("subject_id"))?;
        let label = record[1]
            .parse::<usize>()
            .ok()
            .and_then(Label::from_class)
            .ok_or_else(|| bad("label"))?;
        let window = record[2].parse().map_err(|_| bad("window"))?;
        let values = record
            .iter()
            .skip(3)
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad("energy"))?;
        matrices.push(BandEnergyMatrix::new(subject_id, label, window, channels, bands, values)?);
    }
    Ok((fingerprint, matrices))
}
