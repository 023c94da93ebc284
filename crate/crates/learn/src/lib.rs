//! Classifiers for per-window EEG feature samples: brute-force k-nearest
//! neighbours, an RBF support vector machine trained by SMO, and a small
//! convolutional network with batch normalization, dropout and early
//! stopping. Everything is implemented directly on `ndarray`.

pub mod cnn;
pub mod dataset;
pub mod error;
pub mod knn;
pub mod svm;

pub use cnn::{cnn_train, Checkpoint, CnnArchitecture, Network, Precision, TrainConfig, TrainHistory};
pub use dataset::{Dataset, SampleShape, Standardization, STD_FLOOR};
pub use error::{LearnError, Result};
pub use knn::{KnnClassifier, KnnConfig};
pub use svm::{svm_fit, SvmConfig, SvmModel};
