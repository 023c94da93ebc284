use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use topoeeg_core::dsp::Wavelet;
use topoeeg_core::ingest::CohortSpec;
use topoeeg_core::tensorize::InterpMethod;
use topoeeg_core::{BandName, ClassifierKind, FeatureModel, PipelineConfig};
use topoeeg_learn::Precision;

#[derive(Debug, Parser)]
#[command(name = "topoeeg", version, about = "Scalp-grid EEG band-energy classification experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic cohort as CSV recordings plus a manifest.
    Synth(SynthArgs),
    /// Compute per-window band energies and store them in the feature cache.
    Featurize(RunArgs),
    /// Cross-validate one model/classifier configuration.
    Cv(RunArgs),
    /// Compare interpolation methods and d_max values on identical folds.
    InterpCompare(InterpCompareArgs),
    /// Compare window strides N/4, N/2, N and 3N/2 on identical folds.
    StrideCompare(RunArgs),
    /// Print a stored report or comparison as text.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory for the manifest and recordings.
    #[arg(long)]
    pub out: PathBuf,
    /// Electrode layout file (name,row,col per line); defaults to the bundled layout.
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Cohort seed.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[command(flatten)]
    pub cohort: CohortArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Output directory; every file the command writes goes below it.
    #[arg(long)]
    pub out: PathBuf,
    /// Resolved configuration written by an earlier run; flags given here override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Feature cache directory (default: <out>/cache).
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Recompute features even when a matching cache entry exists.
    #[arg(long)]
    pub no_cache: bool,
    /// Cohort manifest (subject_id,label,path,fs_hz). Without it a synthetic cohort is generated in memory.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Sampling rate every manifest entry must have.
    #[arg(long)]
    pub fs: Option<f64>,
    /// Electrode layout file (name,row,col per line).
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Seed of the in-memory synthetic cohort.
    #[arg(long)]
    pub cohort_seed: Option<u64>,
    #[command(flatten)]
    pub cohort: CohortArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct InterpCompareArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated interpolation methods (default: all five).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub methods: Option<Vec<String>>,
    /// Comma-separated d_max values (default: the configured d_max).
    #[arg(long = "d-max-list", value_delimiter = ',')]
    pub d_max_list: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A report.json or comparison.json written by cv or a compare command.
    pub path: PathBuf,
    /// Print the per-subject CSV instead of the text summary (reports only).
    #[arg(long)]
    pub subjects: bool,
}

#[derive(Debug, Args)]
pub struct CohortArgs {
    #[arg(long)]
    pub subjects: Option<usize>,
    #[arg(long)]
    pub patients: Option<usize>,
    /// Recording length in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Sampling rate of generated recordings.
    #[arg(long)]
    pub synth_fs: Option<f64>,
    #[arg(long)]
    pub effect_band: Option<BandName>,
    /// Comma-separated electrode names carrying the patient effect.
    #[arg(long, value_delimiter = ',')]
    pub effect_electrodes: Option<Vec<String>>,
    /// Patient/control energy ratio in the effect band at the effect electrodes.
    #[arg(long)]
    pub energy_ratio: Option<f64>,
    #[arg(long)]
    pub white_rms: Option<f64>,
}

impl CohortArgs {
    pub fn apply(&self, spec: &mut CohortSpec) {
        set(&mut spec.n_subjects, self.subjects);
        set(&mut spec.n_patients, self.patients);
        set(&mut spec.duration_s, self.duration);
        set(&mut spec.fs_hz, self.synth_fs);
        set(&mut spec.effect.band, self.effect_band);
        set(&mut spec.effect.electrodes, self.effect_electrodes.clone());
        set(&mut spec.effect.energy_ratio, self.energy_ratio);
        set(&mut spec.noise.white_rms, self.white_rms);
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_none()
            && self.patients.is_none()
            && self.duration.is_none()
            && self.synth_fs.is_none()
            && self.effect_band.is_none()
            && self.effect_electrodes.is_none()
            && self.energy_ratio.is_none()
            && self.white_rms.is_none()
    }
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub window_size: Option<usize>,
    #[arg(long)]
    pub window_stride: Option<usize>,
    #[arg(long)]
    pub wavelet: Option<Wavelet>,
    #[arg(long)]
    pub wpt_depth: Option<u32>,
    #[arg(long)]
    pub bandpass_lo: Option<f64>,
    #[arg(long)]
    pub bandpass_hi: Option<f64>,
    /// concat or grid.
    #[arg(long)]
    pub model: Option<FeatureModel>,
    /// idw-nn, idw-zero, nearest, linear-barycentric or cubic-spline.
    #[arg(long, visible_alias = "interp-method")]
    pub interp: Option<InterpMethod>,
    #[arg(long)]
    pub d_max: Option<f64>,
    /// cnn, svm or knn.
    #[arg(long)]
    pub classifier: Option<ClassifierKind>,
    #[arg(long, visible_alias = "threshold")]
    pub subject_threshold: Option<f64>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    /// Seed for folds, validation splits and training.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub knn_k: Option<usize>,
    #[arg(long)]
    pub svm_sigma: Option<f64>,
    /// RBF gamma; overrides --svm-sigma.
    #[arg(long)]
    pub svm_gamma: Option<f64>,
    #[arg(long)]
    pub svm_c: Option<f64>,
    #[arg(long)]
    pub svm_tolerance: Option<f64>,
    #[arg(long)]
    pub svm_max_passes: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub min_delta: Option<f64>,
    /// f32 or f64 network arithmetic.
    #[arg(long, value_parser = parse_precision)]
    pub precision: Option<Precision>,
}

impl PipelineArgs {
    pub fn apply(&self, c: &mut PipelineConfig) {
        set(&mut c.features.window_size, self.window_size);
        set(&mut c.features.window_stride, self.window_stride);
        set(&mut c.features.wavelet, self.wavelet);
        set(&mut c.features.wpt_depth, self.wpt_depth);
        set(&mut c.features.bandpass_lo_hz, self.bandpass_lo);
        set(&mut c.features.bandpass_hi_hz, self.bandpass_hi);
        set(&mut c.model, self.model);
        set(&mut c.interp_method, self.interp);
        set(&mut c.d_max, self.d_max);
        set(&mut c.classifier, self.classifier);
        set(&mut c.subject_threshold, self.subject_threshold);
        set(&mut c.folds, self.folds);
        set(&mut c.validation_fraction, self.validation_fraction);
        set(&mut c.seed, self.seed);
        set(&mut c.knn.k, self.knn_k);
        set(&mut c.svm.sigma, self.svm_sigma);
        if self.svm_gamma.is_some() {
            c.svm.gamma = self.svm_gamma;
        }
        set(&mut c.svm.c, self.svm_c);
        set(&mut c.svm.tolerance, self.svm_tolerance);
        set(&mut c.svm.max_passes, self.svm_max_passes);
        set(&mut c.cnn.learning_rate, self.learning_rate);
        set(&mut c.cnn.batch_size, self.batch_size);
        set(&mut c.cnn.max_epochs, self.max_epochs);
        set(&mut c.cnn.patience, self.patience);
        set(&mut c.cnn.min_delta, self.min_delta);
        set(&mut c.cnn.precision, self.precision);
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn parse_precision(s: &str) -> Result<Precision, String> {
    match s.to_ascii_lowercase().as_str() {
        "f32" => Ok(Precision::F32),
        "f64" => Ok(Precision::F64),
        _ => Err(format!("unknown precision {s:?} (expected f32 or f64)")),
    }
}
