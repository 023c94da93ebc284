use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use topoeeg_learn::{KnnConfig, SvmConfig, TrainConfig};

use crate::bands::BandSpec;
use crate::dsp::Wavelet;
use crate::error::{CoreError, Result};
use crate::tensorize::InterpMethod;

/// How a window's 34×5 energy matrix is presented to a classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureModel {
    /// Channel rows stacked as a 34×5×1 image (170 values).
    Concat,
    /// Energies interpolated onto the 15×15 scalp raster, 15×15×5.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Cnn,
    Svm,
    Knn,
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, [$($variant:path => $name:literal),+ $(,)?]) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self {
                    $($variant => $name),+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = CoreError;

            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($name => Ok($variant),)+
                    _ => Err(CoreError::InvalidConfig(format!(concat!("unknown ", $what, " {:?}"), s))),
                }
            }
        }
    };
}

keyword_enum!(FeatureModel, "model", [FeatureModel::Concat => "concat", FeatureModel::Grid => "grid"]);
keyword_enum!(ClassifierKind, "classifier", [
    ClassifierKind::Cnn => "cnn",
    ClassifierKind::Svm => "svm",
    ClassifierKind::Knn => "knn",
]);

/// Everything that determines the per-window energy matrices. Two runs
/// whose feature configurations hash equal can share cached features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub window_size: usize,
    pub window_stride: usize,
    pub wavelet: Wavelet,
    pub wpt_depth: u32,
    pub bandpass_lo_hz: f64,
    pub bandpass_hi_hz: f64,
    pub bands: BandSpec,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            window_size: 5120,
            window_stride: 5120,
            wavelet: Wavelet::default(),
            wpt_depth: 7,
            bandpass_lo_hz: 1.0,
            bandpass_hi_hz: 50.0,
            bands: BandSpec::default(),
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_size == 0 || self.window_stride == 0 {
            return Err(CoreError::InvalidConfig(
                "window size and stride must be positive".into(),
            ));
        }
        if self.wpt_depth == 0 || self.wpt_depth > 16 {
            return Err(CoreError::InvalidConfig(format!(
                "wavelet packet depth {} outside 1..=16",
                self.wpt_depth
            )));
        }
        if self.window_size % (1usize << self.wpt_depth) != 0 {
            return Err(CoreError::InvalidConfig(format!(
                "window size {} is not a multiple of 2^{}",
                self.window_size, self.wpt_depth
            )));
        }
        if !(self.bandpass_lo_hz >= 0.0 && self.bandpass_lo_hz < self.bandpass_hi_hz) {
            return Err(CoreError::InvalidConfig(format!(
                "band-pass edges [{}, {}] are not increasing",
                self.bandpass_lo_hz, self.bandpass_hi_hz
            )));
        }
        BandSpec::new(self.bands.bands().to_vec())?;
        Ok(())
    }

    /// Validation that also needs the sampling rate.
    pub fn validate_for_rate(&self, fs_hz: f64) -> Result<()> {
        self.validate()?;
        if self.bandpass_hi_hz > fs_hz / 2.0 {
            return Err(CoreError::InvalidBand {
                lo_hz: self.bandpass_lo_hz,
                hi_hz: self.bandpass_hi_hz,
                fs_hz,
            });
        }
        let leaf_hz = fs_hz / (1u64 << (self.wpt_depth + 1)) as f64;
        self.bands.check_alignment(leaf_hz)?;
        if self.bands.max_hz() > fs_hz / 2.0 {
            return Err(CoreError::InvalidConfig(format!(
                "bands extend to {} Hz, beyond the {} Hz Nyquist limit",
                self.bands.max_hz(),
                fs_hz / 2.0
            )));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        sha256_json(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub features: FeatureConfig,
    pub model: FeatureModel,
    pub interp_method: InterpMethod,
    pub d_max: f64,
    pub classifier: ClassifierKind,
    pub subject_threshold: f64,
    pub folds: usize,
    /// Fraction of each class among the non-test subjects held out for
    /// validation (early stopping).
    pub validation_fraction: f64,
    pub seed: u64,
    pub knn: KnnConfig,
    pub svm: SvmConfig,
    pub cnn: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            features: FeatureConfig::default(),
            model: FeatureModel::Grid,
            interp_method: InterpMethod::IdwNn,
            d_max: 4.0,
            classifier: ClassifierKind::Cnn,
            subject_threshold: 0.45,
            folds: 8,
            validation_fraction: 0.1,
            seed: 7,
            knn: KnnConfig::default(),
            svm: SvmConfig::default(),
            cnn: TrainConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        if !(self.subject_threshold > 0.0 && self.subject_threshold < 1.0) {
            return Err(CoreError::InvalidConfig(format!(
                "subject threshold {} outside (0, 1)",
                self.subject_threshold
            )));
        }
        if self.folds < 2 {
            return Err(CoreError::InvalidConfig(format!(
                "need at least 2 folds, got {}",
                self.folds
            )));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(CoreError::InvalidConfig(format!(
                "validation fraction {} outside (0, 1)",
                self.validation_fraction
            )));
        }
        if !(self.d_max > 0.0 && self.d_max.is_finite()) {
            return Err(CoreError::InvalidConfig(format!(
                "d_max must be positive, got {}",
                self.d_max
            )));
        }
        if self.knn.k == 0 {
            return Err(CoreError::InvalidConfig("kNN needs k >= 1".into()));
        }
        self.svm.validate()?;
        self.cnn.validate()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form; identical configurations give
    /// identical fingerprints.
    pub fn fingerprint(&self) -> String {
        sha256_json(self)
    }
}

pub(crate) fn sha256_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("configuration serializes");
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
