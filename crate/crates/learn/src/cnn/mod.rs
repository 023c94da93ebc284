//! Convolutional classifier for band-energy images.
//!
//! The network is generic over its floating-point type: experiments train in
//! `f32` for speed, gradient checks run in `f64`.

mod arch;
mod checkpoint;
mod layers;
mod network;
mod train;

pub use arch::CnnArchitecture;
pub use checkpoint::{Checkpoint, StoredTensor, CHECKPOINT_FORMAT};
pub use layers::{Activation, BatchNorm, Conv2d, Dense, Dropout, Flatten, MaxPool2, Pass, Relu};
pub use network::{softmax, softmax_cross_entropy, Layer, Network, TensorView};
pub use train::{cnn_train, EpochRecord, Precision, TrainConfig, TrainHistory};

/// Floating-point element type of a network.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + ndarray::LinalgScalar
    + ndarray::ScalarOperand
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + std::fmt::Debug
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}
