use serde::{Deserialize, Serialize};

use crate::dataset::SampleShape;
use crate::error::{LearnError, Result};

/// Layer stack of the scalp-grid network:
///
/// ```text
/// batchnorm(input)
/// conv k×k → filters, batchnorm, ReLU
/// conv k×k → filters, batchnorm, ReLU
/// maxpool 2×2 (floor)
/// dropout(conv_dropout)
/// flatten
/// dense → dense_units, ReLU
/// dropout(dense_dropout)
/// dense → classes, softmax
/// ```
///
/// Convolutions are stride 1 with same padding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CnnArchitecture {
    pub input: SampleShape,
    pub conv_filters: usize,
    pub kernel: usize,
    pub dense_units: usize,
    pub conv_dropout: f64,
    pub dense_dropout: f64,
    pub classes: usize,
}

impl CnnArchitecture {
    /// 64 filters of 3×3, dense 128, dropout 0.25 / 0.2, two classes.
    pub fn standard(input: SampleShape) -> Self {
        Self {
            input,
            conv_filters: 64,
            kernel: 3,
            dense_units: 128,
            conv_dropout: 0.25,
            dense_dropout: 0.2,
            classes: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let SampleShape {
            height,
            width,
            channels,
        } = self.input;
        let fail = |msg: String| Err(LearnError::InconsistentShape(msg));
        if channels == 0 || self.conv_filters == 0 || self.dense_units == 0 {
            return fail("channel, filter and unit counts must be positive".into());
        }
        if self.kernel == 0 || self.kernel % 2 == 0 {
            return fail(format!(
                "kernel must be odd for same padding, got {}",
                self.kernel
            ));
        }
        if height < 2 || width < 2 {
            return fail(format!(
                "input {height}×{width} too small for 2×2 pooling"
            ));
        }
        if self.classes < 2 {
            return fail(format!("need at least 2 classes, got {}", self.classes));
        }
        for rate in [self.conv_dropout, self.dense_dropout] {
            if !(0.0..1.0).contains(&rate) {
                return fail(format!("dropout rate {rate} outside [0, 1)"));
            }
        }
        Ok(())
    }

    /// Feature map after the two convolutions and pooling.
    pub fn pooled_shape(&self) -> SampleShape {
        SampleShape::new(
            self.input.height / 2,
            self.input.width / 2,
            self.conv_filters,
        )
    }

    pub fn flatten_len(&self) -> usize {
        self.pooled_shape().len()
    }
}
