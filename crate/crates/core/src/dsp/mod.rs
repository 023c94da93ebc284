//! Signal processing: band-pass filtering, windowing, the wavelet packet
//! filter bank and per-band window energies.

pub mod bandpass;
pub mod features;
pub mod wavelet;
pub mod window;
pub mod wpt;

pub use bandpass::{bandpass, Bandpass};
pub use features::{
    featurize_recording, read_feature_dump, write_feature_dump, BandEnergyMatrix, Featurizer,
};
pub use wavelet::Wavelet;
pub use window::{segment_windows, window_starts, Window};
pub use wpt::{band_energies, leaves_for_bands, wpt_decompose, wpt_decompose_lowest, LeafSpectrum};
