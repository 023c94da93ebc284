use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::arch::CnnArchitecture;
use super::layers::{cast, Activation, BatchNorm, Conv2d, Dense, Dropout, Flatten, MaxPool2, Pass, Relu};
use super::Scalar;
use crate::dataset::SampleShape;
use crate::error::{LearnError, Result};

#[derive(Debug, Clone)]
pub enum Layer<F> {
    BatchNorm(BatchNorm<F>),
    Conv(Conv2d<F>),
    Relu(Relu),
    MaxPool(MaxPool2),
    Dropout(Dropout<F>),
    Flatten(Flatten),
    Dense(Dense<F>),
}

impl<F: Scalar> Layer<F> {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::BatchNorm(_) => "batchnorm",
            Layer::Conv(_) => "conv",
            Layer::Relu(_) => "relu",
            Layer::MaxPool(_) => "maxpool",
            Layer::Dropout(_) => "dropout",
            Layer::Flatten(_) => "flatten",
            Layer::Dense(_) => "dense",
        }
    }

    fn forward(&mut self, x: Activation<F>, pass: &mut Pass) -> Activation<F> {
        match self {
            Layer::BatchNorm(l) => l.forward(x, pass),
            Layer::Conv(l) => l.forward(x, pass),
            Layer::Relu(l) => l.forward(x, pass),
            Layer::MaxPool(l) => l.forward(x, pass),
            Layer::Dropout(l) => l.forward(x, pass),
            Layer::Flatten(l) => l.forward(x),
            Layer::Dense(l) => l.forward(x, pass),
        }
    }

    fn backward(&mut self, dy: Activation<F>) -> Activation<F> {
        match self {
            Layer::BatchNorm(l) => l.backward(dy),
            Layer::Conv(l) => l.backward(dy),
            Layer::Relu(l) => l.backward(dy),
            Layer::MaxPool(l) => l.backward(dy),
            Layer::Dropout(l) => l.backward(dy),
            Layer::Flatten(l) => l.backward(dy),
            Layer::Dense(l) => l.backward(dy),
        }
    }
}

/// One stored array: trainable parameter or batch-norm running statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorView<'a, F> {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: &'a [F],
    pub trainable: bool,
}

/// The scalp-grid convolutional classifier.
#[derive(Debug, Clone)]
pub struct Network<F> {
    arch: CnnArchitecture,
    layers: Vec<Layer<F>>,
}

fn uniform<F: Scalar>(rng: &mut ChaCha8Rng, shape: (usize, usize), limit: f64) -> Array2<F> {
    Array2::from_shape_simple_fn(shape, || cast(rng.random_range(-limit..limit)))
}

impl<F: Scalar> Network<F> {
    /// Builds the layer stack with fan-in-scaled uniform weights (He bounds
    /// `√(6/fan_in)` ahead of ReLU, `√(3/fan_in)` for the output layer), zero
    /// biases, unit batch-norm scales and zero shifts.
    pub fn init(arch: CnnArchitecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let SampleShape { channels, .. } = arch.input;
        let (k, filters) = (arch.kernel, arch.conv_filters);

        let conv = |rng: &mut ChaCha8Rng, cin: usize| {
            let fan_in = k * k * cin;
            let w = uniform(rng, (fan_in, filters), (6.0 / fan_in as f64).sqrt());
            Conv2d::new(cin, filters, k, w, Array1::zeros(filters))
        };
        let conv1 = conv(&mut rng, channels);
        let conv2 = conv(&mut rng, filters);
        let flat = arch.flatten_len();
        let dense1 = Dense::new(
            uniform(&mut rng, (flat, arch.dense_units), (6.0 / flat as f64).sqrt()),
            Array1::zeros(arch.dense_units),
        );
        let dense2 = Dense::new(
            uniform(
                &mut rng,
                (arch.dense_units, arch.classes),
                (3.0 / arch.dense_units as f64).sqrt(),
            ),
            Array1::zeros(arch.classes),
        );

        let layers = vec![
            Layer::BatchNorm(BatchNorm::new(channels)),
            Layer::Conv(conv1),
            Layer::BatchNorm(BatchNorm::new(filters)),
            Layer::Relu(Relu::default()),
            Layer::Conv(conv2),
            Layer::BatchNorm(BatchNorm::new(filters)),
            Layer::Relu(Relu::default()),
            Layer::MaxPool(MaxPool2::default()),
            Layer::Dropout(Dropout::new(arch.conv_dropout)),
            Layer::Flatten(Flatten::default()),
            Layer::Dense(dense1),
            Layer::Relu(Relu::default()),
            Layer::Dropout(Dropout::new(arch.dense_dropout)),
            Layer::Dense(dense2),
        ];
        Ok(Self { arch, layers })
    }

    pub fn architecture(&self) -> &CnnArchitecture {
        &self.arch
    }

    pub fn layers(&self) -> &[Layer<F>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<F>] {
        &mut self.layers
    }

    /// Packs samples (each `h·w·c` values, channels innermost) into a batch.
    pub fn batch<'a, I>(&self, samples: I) -> Result<Activation<F>>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let shape = self.arch.input;
        let dim = shape.len();
        let mut flat = Vec::new();
        let mut n = 0;
        for sample in samples {
            if sample.len() != dim {
                return Err(LearnError::ShapeMismatch {
                    expected: dim,
                    got: sample.len(),
                });
            }
            flat.extend(sample.iter().map(|&v| cast::<F>(v)));
            n += 1;
        }
        let data = Array2::from_shape_vec((n * shape.height * shape.width, shape.channels), flat)
            .expect("length checked");
        Ok(Activation::new(data, n, shape.height, shape.width))
    }

    /// Logits of shape `(n, classes)`.
    pub fn forward(&mut self, mut x: Activation<F>, pass: &mut Pass) -> Activation<F> {
        for layer in &mut self.layers {
            x = layer.forward(x, pass);
        }
        x
    }

    /// Back-propagates a logit gradient, leaving parameter gradients on each
    /// layer, and returns the gradient with respect to the network input.
    pub fn backward(&mut self, mut dy: Activation<F>) -> Activation<F> {
        for layer in self.layers.iter_mut().rev() {
            dy = layer.backward(dy);
        }
        dy
    }

    /// Mean cross-entropy of the batch, with gradients left on the layers.
    pub fn loss_and_backward(
        &mut self,
        x: Activation<F>,
        labels: &[usize],
        pass: &mut Pass,
    ) -> Result<(f64, Activation<F>)> {
        pass.cache = true;
        let logits = self.forward(x, pass);
        let (loss, dlogits) = softmax_cross_entropy(&logits.data, labels, self.arch.classes)?;
        let n = logits.n;
        let dx = self.backward(Activation::new(dlogits, n, 1, 1));
        Ok((loss, dx))
    }

    /// Mean cross-entropy without touching gradients.
    pub fn loss(&mut self, x: Activation<F>, labels: &[usize], pass: &mut Pass) -> Result<f64> {
        let logits = self.forward(x, pass);
        Ok(softmax_cross_entropy(&logits.data, labels, self.arch.classes)?.0)
    }

    /// Class probabilities in inference mode (no dropout, running batch-norm
    /// statistics). Softmax is evaluated in 64-bit.
    pub fn predict_proba_batch<'a, I>(&mut self, samples: I) -> Result<Vec<Vec<f64>>>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let x = self.batch(samples)?;
        let logits = self.forward(x, &mut Pass::inference());
        Ok(logits
            .data
            .rows()
            .into_iter()
            .map(|row| softmax(&row.iter().map(|v| v.to_f64().unwrap()).collect::<Vec<_>>()))
            .collect())
    }

    pub fn predict_proba(&mut self, sample: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .predict_proba_batch(std::iter::once(sample))?
            .pop()
            .expect("one sample in, one out"))
    }

    /// Calls `f(value, gradient)` for every trainable array in declared order.
    pub fn visit_params(&mut self, mut f: impl FnMut(&mut [F], &[F])) {
        for layer in &mut self.layers {
            match layer {
                Layer::Conv(l) => {
                    f(l.weight.as_slice_mut().unwrap(), l.grad_weight.as_slice().unwrap());
                    f(l.bias.as_slice_mut().unwrap(), l.grad_bias.as_slice().unwrap());
                }
                Layer::Dense(l) => {
                    f(l.weight.as_slice_mut().unwrap(), l.grad_weight.as_slice().unwrap());
                    f(l.bias.as_slice_mut().unwrap(), l.grad_bias.as_slice().unwrap());
                }
                Layer::BatchNorm(l) => {
                    f(l.gamma.as_slice_mut().unwrap(), l.grad_gamma.as_slice().unwrap());
                    f(l.beta.as_slice_mut().unwrap(), l.grad_beta.as_slice().unwrap());
                }
                _ => {}
            }
        }
    }

    /// Every stored array, trainable or not, in declared order.
    pub fn tensors(&self) -> Vec<TensorView<'_, F>> {
        fn view<'a, F>(
            index: usize,
            kind: &str,
            name: &str,
            shape: &[usize],
            values: &'a [F],
            trainable: bool,
        ) -> TensorView<'a, F> {
            TensorView {
                name: format!("{index}.{kind}.{name}"),
                shape: shape.to_vec(),
                values,
                trainable,
            }
        }
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let kind = layer.kind();
            match layer {
                Layer::Conv(Conv2d { weight, bias, .. }) | Layer::Dense(Dense { weight, bias, .. }) => {
                    out.push(view(i, kind, "weight", weight.shape(), weight.as_slice().unwrap(), true));
                    out.push(view(i, kind, "bias", bias.shape(), bias.as_slice().unwrap(), true));
                }
                Layer::BatchNorm(l) => {
                    for (name, array, trainable) in [
                        ("gamma", &l.gamma, true),
                        ("beta", &l.beta, true),
                        ("running_mean", &l.running_mean, false),
                        ("running_var", &l.running_var, false),
                    ] {
                        out.push(view(i, kind, name, array.shape(), array.as_slice().unwrap(), trainable));
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// Overwrites every stored array, in the order of [`Network::tensors`].
    pub fn load_tensors(&mut self, mut values: impl Iterator<Item = Vec<f64>>) -> Result<()> {
        let mut fill = |dst: &mut [F], what: &str| -> Result<()> {
            let src = values
                .next()
                .ok_or_else(|| LearnError::Checkpoint(format!("missing tensor for {what}")))?;
            if src.len() != dst.len() {
                return Err(LearnError::Checkpoint(format!(
                    "{what}: expected {} values, got {}",
                    dst.len(),
                    src.len()
                )));
            }
            for (d, s) in dst.iter_mut().zip(src) {
                *d = cast(s);
            }
            Ok(())
        };
        for layer in &mut self.layers {
            match layer {
                Layer::Conv(l) => {
                    fill(l.weight.as_slice_mut().unwrap(), "conv weight")?;
                    fill(l.bias.as_slice_mut().unwrap(), "conv bias")?;
                }
                Layer::Dense(l) => {
                    fill(l.weight.as_slice_mut().unwrap(), "dense weight")?;
                    fill(l.bias.as_slice_mut().unwrap(), "dense bias")?;
                }
                Layer::BatchNorm(l) => {
                    fill(l.gamma.as_slice_mut().unwrap(), "batchnorm gamma")?;
                    fill(l.beta.as_slice_mut().unwrap(), "batchnorm beta")?;
                    fill(l.running_mean.as_slice_mut().unwrap(), "batchnorm mean")?;
                    fill(l.running_var.as_slice_mut().unwrap(), "batchnorm var")?;
                }
                _ => {}
            }
        }
        if values.next().is_some() {
            return Err(LearnError::Checkpoint("more tensors than layers".into()));
        }
        Ok(())
    }

    /// Output shape of every layer for one sample, found by running a zero
    /// input through the stack.
    pub fn shape_trace(&self) -> Vec<(&'static str, SampleShape)> {
        let mut probe = self.clone();
        let mut x = probe
            .batch(std::iter::once(vec![0.0; self.arch.input.len()].as_slice()))
            .expect("input-shaped probe");
        let mut trace = Vec::new();
        let mut pass = Pass::inference();
        for layer in &mut probe.layers {
            x = layer.forward(x, &mut pass);
            trace.push((layer.kind(), SampleShape::new(x.h, x.w, x.channels())));
        }
        trace
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Mean cross-entropy over rows and its gradient `(p − onehot) / n`.
pub fn softmax_cross_entropy<F: Scalar>(
    logits: &Array2<F>,
    labels: &[usize],
    classes: usize,
) -> Result<(f64, Array2<F>)> {
    let n = logits.nrows();
    if labels.len() != n {
        return Err(LearnError::ShapeMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    let mut grad = Array2::<F>::zeros(logits.raw_dim());
    let mut loss = 0.0;
    for (i, (row, &label)) in logits.rows().into_iter().zip(labels).enumerate() {
        if label >= classes {
            return Err(LearnError::LabelOutOfRange { label, classes });
        }
        let z: Vec<f64> = row.iter().map(|v| v.to_f64().unwrap()).collect();
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln() + max;
        loss += log_sum - z[label];
        for (j, &zj) in z.iter().enumerate() {
            let p = (zj - log_sum).exp();
            let target = if j == label { 1.0 } else { 0.0 };
            grad[[i, j]] = cast((p - target) / n as f64);
        }
    }
    Ok((loss / n as f64, grad))
}
