//! EEG band-energy classification pipeline.
//!
//! Recordings (from CSV files or a seeded synthetic generator) are
//! band-pass filtered and cut into windows; a wavelet packet filter bank
//! gives each window a channel × band energy matrix. Matrices are fed to a
//! classifier either flattened or interpolated onto a 15×15 scalp image,
//! and subject-level stratified cross-validation turns window votes into
//! per-subject predictions and confusion metrics.

pub mod bands;
pub mod config;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod fsio;
pub mod ingest;
pub mod layout;
pub mod recording;
pub mod tensorize;

pub use bands::{default_band_spec, reverse_band_order, Band, BandName, BandSpec};
pub use config::{ClassifierKind, FeatureConfig, FeatureModel, PipelineConfig};
pub use error::{CoreError, ErrorClass, Result};
pub use layout::{load_layout, Electrode, ElectrodeLayout, GRID_SIZE, N_ELECTRODES};
pub use recording::{Label, Recording};
