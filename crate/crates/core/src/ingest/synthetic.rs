//! Seeded synthetic cohorts.
//!
//! Each channel is a sum of sinusoids with independent uniform phases, one
//! per spectral bin inside each band, plus a little white noise. Because
//! every component sits at an exact bin of the recording length, a band's
//! energy is fixed by its amplitude and can be steered directly: patients
//! get the effect band at the effect electrodes multiplied by
//! `sqrt(energy_ratio)` in amplitude.
//!
//! Randomness comes from ChaCha8 seeded with the cohort seed. Subject `i`
//! draws from stream `i + 1` and the label shuffle from stream 0, so a
//! subject's signal depends only on (seed, i) and its label, never on how
//! many other subjects exist or in what order they are generated. The base
//! signal is drawn identically for both labels, so forcing a subject's
//! label yields its matched counterpart.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::bands::{default_band_spec, BandName};
use crate::config::sha256_json;
use crate::error::{CoreError, Result};
use crate::ingest::{CohortSource, SubjectInfo};
use crate::layout::ElectrodeLayout;
use crate::recording::{Label, Recording};

/// Components stay this far inside each band edge so that none straddles
/// a wavelet-packet leaf boundary.
const EDGE_GUARD_HZ: f64 = 0.5;
/// Components are confined to this range, inside the default band-pass.
const MIN_COMPONENT_HZ: f64 = 2.0;
const MAX_COMPONENT_HZ: f64 = 48.0;
/// Shortest recording accepted, one default analysis window.
pub const MIN_SAMPLES: usize = 5120;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSpec {
    pub band: BandName,
    pub electrodes: Vec<String>,
    pub energy_ratio: f64,
}

impl Default for EffectSpec {
    fn default() -> Self {
        Self {
            band: BandName::Alpha,
            electrodes: ["Fp1", "Fp2", "F3", "F4"].map(String::from).to_vec(),
            energy_ratio: 3.0,
        }
    }
}

/// Baseline signal profile shared by all subjects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// RMS amplitude of each band's component mixture, δ..γ.
    pub band_rms: [f64; 5],
    /// RMS of additive white noise.
    pub white_rms: f64,
    /// Log-normal spread of a per-subject overall gain.
    pub subject_gain_sigma: f64,
    /// Log-normal spread of a per-(channel, band) gain.
    pub channel_gain_sigma: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            band_rms: [12.0, 7.0, 8.0, 5.0, 2.5],
            white_rms: 1.0,
            subject_gain_sigma: 0.1,
            channel_gain_sigma: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n_subjects: usize,
    pub n_patients: usize,
    pub duration_s: f64,
    pub fs_hz: f64,
    pub effect: EffectSpec,
    pub noise: NoiseModel,
    pub seed: u64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            n_subjects: 64,
            n_patients: 32,
            duration_s: 120.0,
            fs_hz: 1024.0,
            effect: EffectSpec::default(),
            noise: NoiseModel::default(),
            seed: 7,
        }
    }
}

impl CohortSpec {
    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.fs_hz).round() as usize
    }

    pub fn validate(&self, layout: &ElectrodeLayout) -> Result<()> {
        let fail = |m: String| Err(CoreError::InvalidCohort(m));
        if self.n_subjects == 0 {
            return fail("cohort needs at least one subject".into());
        }
        if self.n_patients > self.n_subjects {
            return fail(format!(
                "{} patients exceed {} subjects",
                self.n_patients, self.n_subjects
            ));
        }
        if !(self.fs_hz > 2.0 * MAX_COMPONENT_HZ && self.fs_hz.is_finite()) {
            return fail(format!("sampling rate {} Hz is too low", self.fs_hz));
        }
        if !(self.duration_s.is_finite() && self.n_samples() >= MIN_SAMPLES) {
            return fail(format!(
                "{} s at {} Hz is shorter than one {MIN_SAMPLES}-sample window",
                self.duration_s, self.fs_hz
            ));
        }
        if !(self.effect.energy_ratio > 1.0 && self.effect.energy_ratio.is_finite()) {
            return fail(format!(
                "energy ratio must exceed 1, got {}",
                self.effect.energy_ratio
            ));
        }
        for name in &self.effect.electrodes {
            if layout.index_of(name).is_none() {
                return fail(format!("effect electrode {name} is not in the layout"));
            }
        }
        let n = &self.noise;
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !n.band_rms.iter().all(|&v| finite_nonneg(v))
            || !finite_nonneg(n.white_rms)
            || !finite_nonneg(n.subject_gain_sigma)
            || !finite_nonneg(n.channel_gain_sigma)
        {
            return fail("noise model amplitudes must be finite and non-negative".into());
        }
        Ok(())
    }

    /// Exactly `n_patients` patients, placed by a seeded shuffle.
    pub fn labels(&self) -> Vec<Label> {
        let mut labels: Vec<Label> = (0..self.n_subjects)
            .map(|i| if i < self.n_patients { Label::Patient } else { Label::Control })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(0);
        labels.shuffle(&mut rng);
        labels
    }
}

/// Lazily generated cohort; see the module documentation.
pub struct SyntheticCohort {
    spec: CohortSpec,
    layout: ElectrodeLayout,
    subjects: Vec<SubjectInfo>,
    effect_channels: Vec<bool>,
    effect_band: usize,
}

impl SyntheticCohort {
    pub fn new(spec: CohortSpec, layout: ElectrodeLayout) -> Result<Self> {
        spec.validate(&layout)?;
        let subjects = spec
            .labels()
            .into_iter()
            .enumerate()
            .map(|(i, label)| SubjectInfo {
                subject_id: i as u32,
                label,
            })
            .collect();
        let mut effect_channels = vec![false; layout.len()];
        for name in &spec.effect.electrodes {
            effect_channels[layout.index_of(name).expect("validated")] = true;
        }
        let effect_band = default_band_spec()
            .position(spec.effect.band)
            .expect("every band name is in the default spec");
        Ok(Self {
            spec,
            layout,
            subjects,
            effect_channels,
            effect_band,
        })
    }

    pub fn spec(&self) -> &CohortSpec {
        &self.spec
    }

    pub fn layout(&self) -> &ElectrodeLayout {
        &self.layout
    }

    /// Generates subject `index` with its label overridden; the base signal
    /// is unchanged, only the effect scaling depends on the label.
    pub fn generate_with_label(&self, index: usize, label: Label) -> Result<Recording> {
        let spec = &self.spec;
        let n = spec.n_samples();
        let n_channels = self.layout.len();
        let bands = default_band_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(index as u64 + 1);

        let lognormal = |rng: &mut ChaCha8Rng, sigma: f64| {
            let z: f64 = StandardNormal.sample(rng);
            (sigma * z).exp()
        };
        let subject_gain = lognormal(&mut rng, spec.noise.subject_gain_sigma);
        let mut gains = vec![[0.0; 5]; n_channels];
        for g in gains.iter_mut() {
            for v in g.iter_mut() {
                *v = lognormal(&mut rng, spec.noise.channel_gain_sigma);
            }
        }

        let bin_hz = spec.fs_hz / n as f64;
        let bins: Vec<std::ops::Range<usize>> = bands
            .bands()
            .iter()
            .map(|b| {
                let lo = (b.lo_hz + EDGE_GUARD_HZ).max(MIN_COMPONENT_HZ);
                let hi = (b.hi_hz - EDGE_GUARD_HZ).min(MAX_COMPONENT_HZ);
                let first = (lo / bin_hz).ceil() as usize;
                let last = ((hi / bin_hz).ceil() as usize).max(first);
                first..last
            })
            .collect();

        let mut spectra = vec![vec![Complex64::new(0.0, 0.0); n]; n_channels.div_ceil(2)];
        for c in 0..n_channels {
            let pair = &mut spectra[c / 2];
            let unit = if c % 2 == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 1.0)
            };
            for (b, range) in bins.iter().enumerate() {
                let count = range.len();
                if count == 0 {
                    continue;
                }
                let mut amplitude = spec.noise.band_rms[b] * subject_gain * gains[c][b] * (2.0 / count as f64).sqrt();
                if label == Label::Patient && b == self.effect_band && self.effect_channels[c] {
                    amplitude *= spec.effect.energy_ratio.sqrt();
                }
                for k in range.clone() {
                    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    let z = Complex64::from_polar(amplitude / 2.0, phase);
                    pair[k] += unit * z;
                    pair[n - k] += unit * z.conj();
                }
            }
        }

        let ifft = FftPlanner::new().plan_fft_inverse(n);
        let mut channels = Vec::with_capacity(n_channels);
        for (p, spectrum) in spectra.iter_mut().enumerate() {
            ifft.process(spectrum);
            channels.push(spectrum.iter().map(|z| z.re).collect::<Vec<f64>>());
            if 2 * p + 1 < n_channels {
                channels.push(spectrum.iter().map(|z| z.im).collect());
            }
        }
        if spec.noise.white_rms > 0.0 {
            for ch in channels.iter_mut() {
                for v in ch.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v += spec.noise.white_rms * z;
                }
            }
        }
        Recording::new(index as u32, label, spec.fs_hz, &self.layout, channels)
    }
}

impl CohortSource for SyntheticCohort {
    fn subjects(&self) -> &[SubjectInfo] {
        &self.subjects
    }

    fn fs_hz(&self) -> f64 {
        self.spec.fs_hz
    }

    fn load(&self, index: usize) -> Result<Recording> {
        self.generate_with_label(index, self.subjects[index].label)
    }

    fn identity(&self) -> String {
        sha256_json(&(&self.spec, self.layout.to_text()))
    }
}

pub fn generate_synthetic_cohort(spec: &CohortSpec, layout: &ElectrodeLayout) -> Result<Vec<Recording>> {
    let cohort = SyntheticCohort::new(spec.clone(), layout.clone())?;
    (0..cohort.len()).map(|i| cohort.load(i)).collect()
}
