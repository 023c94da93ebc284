//! Layers with explicit forward and backward passes.
//!
//! Activations are NHWC: a 2-D array of shape `(n·h·w, c)`, so convolutions
//! become one matrix product after `im2col` and batch normalization works on
//! columns. Dense layers see `h = w = 1`.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::Scalar;

#[derive(Debug, Clone)]
pub struct Activation<F> {
    pub data: Array2<F>,
    pub n: usize,
    pub h: usize,
    pub w: usize,
}

impl<F: Scalar> Activation<F> {
    pub fn new(data: Array2<F>, n: usize, h: usize, w: usize) -> Self {
        debug_assert_eq!(data.nrows(), n * h * w);
        Self { data, n, h, w }
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }
}

/// How a forward pass treats the stochastic and batch-dependent layers.
pub struct Pass<'a> {
    /// Batch norm normalizes with batch statistics and updates its running
    /// averages; otherwise it uses the running averages.
    pub batch_stats: bool,
    /// Dropout is active only when a generator is supplied.
    pub dropout: Option<&'a mut ChaCha8Rng>,
    /// Keep intermediate values for a following backward pass.
    pub cache: bool,
}

impl Pass<'_> {
    pub fn inference() -> Self {
        Pass {
            batch_stats: false,
            dropout: None,
            cache: false,
        }
    }
}

pub(crate) fn cast<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("representable constant")
}

#[derive(Debug, Clone)]
pub struct Conv2d<F> {
    pub cin: usize,
    pub cout: usize,
    pub kernel: usize,
    /// `(kernel·kernel·cin, cout)`, rows ordered `(ky, kx, ci)`.
    pub weight: Array2<F>,
    pub bias: Array1<F>,
    pub grad_weight: Array2<F>,
    pub grad_bias: Array1<F>,
    cols: Option<Array2<F>>,
    in_dims: (usize, usize, usize),
}

impl<F: Scalar> Conv2d<F> {
    pub fn new(cin: usize, cout: usize, kernel: usize, weight: Array2<F>, bias: Array1<F>) -> Self {
        Self {
            cin,
            cout,
            kernel,
            grad_weight: Array2::zeros(weight.raw_dim()),
            grad_bias: Array1::zeros(bias.raw_dim()),
            weight,
            bias,
            cols: None,
            in_dims: (0, 0, 0),
        }
    }

    fn im2col(&self, x: &Activation<F>) -> Array2<F> {
        let (n, h, w, c, k) = (x.n, x.h, x.w, self.cin, self.kernel);
        let pad = k / 2;
        let width = k * k * c;
        let mut cols = Array2::<F>::zeros((n * h * w, width));
        let src = x.data.as_slice().expect("standard layout");
        let dst = cols.as_slice_mut().expect("standard layout");
        for b in 0..n {
            for y in 0..h {
                for xx in 0..w {
                    let row = ((b * h + y) * w + xx) * width;
                    for ky in 0..k {
                        let iy = y + ky;
                        if iy < pad || iy - pad >= h {
                            continue;
                        }
                        let iy = iy - pad;
                        for kx in 0..k {
                            let ix = xx + kx;
                            if ix < pad || ix - pad >= w {
                                continue;
                            }
                            let ix = ix - pad;
                            let from = ((b * h + iy) * w + ix) * c;
                            let to = row + (ky * k + kx) * c;
                            dst[to..to + c].copy_from_slice(&src[from..from + c]);
                        }
                    }
                }
            }
        }
        cols
    }

    fn col2im(&self, dcols: &Array2<F>) -> Array2<F> {
        let (n, h, w) = self.in_dims;
        let (c, k) = (self.cin, self.kernel);
        let pad = k / 2;
        let width = k * k * c;
        let mut dx = Array2::<F>::zeros((n * h * w, c));
        let src = dcols.as_slice().expect("standard layout");
        let dst = dx.as_slice_mut().expect("standard layout");
        for b in 0..n {
            for y in 0..h {
                for xx in 0..w {
                    let row = ((b * h + y) * w + xx) * width;
                    for ky in 0..k {
                        let iy = y + ky;
                        if iy < pad || iy - pad >= h {
                            continue;
                        }
                        let iy = iy - pad;
                        for kx in 0..k {
                            let ix = xx + kx;
                            if ix < pad || ix - pad >= w {
                                continue;
                            }
                            let ix = ix - pad;
                            let to = ((b * h + iy) * w + ix) * c;
                            let from = row + (ky * k + kx) * c;
                            for (d, &s) in dst[to..to + c].iter_mut().zip(&src[from..from + c]) {
                                *d += s;
                            }
                        }
                    }
                }
            }
        }
        dx
    }

    pub fn forward(&mut self, x: Activation<F>, pass: &mut Pass) -> Activation<F> {
        let cols = self.im2col(&x);
        let mut y = cols.dot(&self.weight);
        y += &self.bias;
        if pass.cache {
            self.in_dims = (x.n, x.h, x.w);
            self.cols = Some(cols);
        }
        Activation::new(y, x.n, x.h, x.w)
    }

    pub fn backward(&mut self, dy: Activation<F>) -> Activation<F> {
        let cols = self.cols.take().expect("forward with cache before backward");
        self.grad_weight = cols.t().dot(&dy.data);
        self.grad_bias = dy.data.sum_axis(Axis(0));
        let dcols = dy.data.dot(&self.weight.t());
        let (n, h, w) = self.in_dims;
        Activation::new(self.col2im(&dcols), n, h, w)
    }
}

#[derive(Debug, Clone)]
pub struct BatchNorm<F> {
    pub gamma: Array1<F>,
    pub beta: Array1<F>,
    pub running_mean: Array1<F>,
    pub running_var: Array1<F>,
    pub grad_gamma: Array1<F>,
    pub grad_beta: Array1<F>,
    pub momentum: f64,
    pub eps: f64,
    cache: Option<BnCache<F>>,
}

#[derive(Debug, Clone)]
struct BnCache<F> {
    xhat: Array2<F>,
    inv_std: Array1<F>,
    batch_stats: bool,
}

impl<F: Scalar> BatchNorm<F> {
    pub const DEFAULT_EPS: f64 = 1e-5;
    pub const DEFAULT_MOMENTUM: f64 = 0.9;

    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Array1::ones(channels),
            beta: Array1::zeros(channels),
            running_mean: Array1::zeros(channels),
            running_var: Array1::ones(channels),
            grad_gamma: Array1::zeros(channels),
            grad_beta: Array1::zeros(channels),
            momentum: Self::DEFAULT_MOMENTUM,
            eps: Self::DEFAULT_EPS,
            cache: None,
        }
    }

    /// Normalized input `x̂` before scale and shift, with the per-column
    /// inverse standard deviation used.
    pub fn normalize(&mut self, x: &Array2<F>, batch_stats: bool) -> (Array2<F>, Array1<F>) {
        let eps: F = cast(self.eps);
        let (mean, var) = if batch_stats {
            let m = x.nrows();
            let mean = x.mean_axis(Axis(0)).expect("non-empty batch");
            let centered = x - &mean;
            let var = centered.mapv(|v| v * v).mean_axis(Axis(0)).expect("non-empty batch");
            let mom: F = cast(self.momentum);
            let unbias: F = if m > 1 {
                cast(m as f64 / (m as f64 - 1.0))
            } else {
                F::one()
            };
            self.running_mean = &self.running_mean * mom + &mean * (F::one() - mom);
            self.running_var = &self.running_var * mom + &(&var * unbias) * (F::one() - mom);
            (mean, var)
        } else {
            (self.running_mean.clone(), self.running_var.clone())
        };
        let inv_std = var.mapv(|v| F::one() / (v + eps).sqrt());
        let xhat = (x - &mean) * &inv_std;
        (xhat, inv_std)
    }

    pub fn forward(&mut self, x: Activation<F>, pass: &mut Pass) -> Activation<F> {
        let (xhat, inv_std) = self.normalize(&x.data, pass.batch_stats);
        let y = &xhat * &self.gamma + &self.beta;
        if pass.cache {
            self.cache = Some(BnCache {
                xhat,
                inv_std,
                batch_stats: pass.batch_stats,
            });
        }
        Activation::new(y, x.n, x.h, x.w)
    }

    pub fn backward(&mut self, dy: Activation<F>) -> Activation<F> {
        let BnCache {
            xhat,
            inv_std,
            batch_stats,
        } = self.cache.take().expect("forward with cache before backward");
        self.grad_gamma = (&dy.data * &xhat).sum_axis(Axis(0));
        self.grad_beta = dy.data.sum_axis(Axis(0));
        let dxhat = &dy.data * &self.gamma;
        let dx = if batch_stats {
            let m: F = cast(dy.data.nrows() as f64);
            let sum_dxhat = dxhat.sum_axis(Axis(0));
            let sum_dxhat_xhat = (&dxhat * &xhat).sum_axis(Axis(0));
            let inner = &dxhat * m - &sum_dxhat - &(&xhat * &sum_dxhat_xhat);
            inner * &(inv_std / m)
        } else {
            dxhat * &inv_std
        };
        Activation::new(dx, dy.n, dy.h, dy.w)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Relu {
    mask: Option<Array2<bool>>,
}

impl Relu {
    pub fn forward<F: Scalar>(&mut self, mut x: Activation<F>, pass: &mut Pass) -> Activation<F> {
        if pass.cache {
            self.mask = Some(x.data.mapv(|v| v > F::zero()));
        }
        x.data.mapv_inplace(|v| if v > F::zero() { v } else { F::zero() });
        x
    }

    pub fn backward<F: Scalar>(&mut self, mut dy: Activation<F>) -> Activation<F> {
        let mask = self.mask.take().expect("forward with cache before backward");
        ndarray::Zip::from(&mut dy.data).and(&mask).for_each(|d, &keep| {
            if !keep {
                *d = F::zero();
            }
        });
        dy
    }
}

/// 2×2 max pooling with stride 2; odd trailing rows/columns are dropped.
#[derive(Debug, Clone, Default)]
pub struct MaxPool2 {
    argmax: Option<Vec<usize>>,
    in_dims: (usize, usize, usize),
}

impl MaxPool2 {
    pub fn forward<F: Scalar>(&mut self, x: Activation<F>, pass: &mut Pass) -> Activation<F> {
        let (n, h, w, c) = (x.n, x.h, x.w, x.channels());
        let (oh, ow) = (h / 2, w / 2);
        let src = x.data.as_slice().expect("standard layout");
        let mut out = Array2::<F>::zeros((n * oh * ow, c));
        let mut argmax = vec![0usize; n * oh * ow * c];
        {
            let dst = out.as_slice_mut().expect("standard layout");
            for b in 0..n {
                for y in 0..oh {
                    for xx in 0..ow {
                        let orow = ((b * oh + y) * ow + xx) * c;
                        for ch in 0..c {
                            let mut best = usize::MAX;
                            let mut best_v = F::neg_infinity();
                            for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                                let idx = ((b * h + 2 * y + dy) * w + 2 * xx + dx) * c + ch;
                                if best == usize::MAX || src[idx] > best_v {
                                    best = idx;
                                    best_v = src[idx];
                                }
                            }
                            dst[orow + ch] = best_v;
                            argmax[orow + ch] = best;
                        }
                    }
                }
            }
        }
        if pass.cache {
            self.argmax = Some(argmax);
            self.in_dims = (n, h, w);
        }
        Activation::new(out, n, oh, ow)
    }

    pub fn backward<F: Scalar>(&mut self, dy: Activation<F>) -> Activation<F> {
        let argmax = self.argmax.take().expect("forward with cache before backward");
        let (n, h, w) = self.in_dims;
        let mut dx = Array2::<F>::zeros((n * h * w, dy.channels()));
        let dst = dx.as_slice_mut().expect("standard layout");
        let src = dy.data.as_slice().expect("standard layout");
        for (&from, &g) in argmax.iter().zip(src) {
            dst[from] += g;
        }
        Activation::new(dx, n, h, w)
    }
}

/// Inverted dropout: kept units are scaled by `1 / (1 − rate)` during
/// training so inference is the identity.
#[derive(Debug, Clone)]
pub struct Dropout<F> {
    pub rate: f64,
    mask: Option<Array2<F>>,
}

impl<F: Scalar> Dropout<F> {
    pub fn new(rate: f64) -> Self {
        Self { rate, mask: None }
    }

    pub fn forward(&mut self, mut x: Activation<F>, pass: &mut Pass) -> Activation<F> {
        match pass.dropout.as_deref_mut() {
            Some(rng) if self.rate > 0.0 => {
                let keep = 1.0 - self.rate;
                let scale: F = cast(1.0 / keep);
                let mask = x.data.mapv(|_| {
                    if rng.random::<f64>() < keep {
                        scale
                    } else {
                        F::zero()
                    }
                });
                x.data *= &mask;
                self.mask = pass.cache.then_some(mask);
            }
            _ => self.mask = None,
        }
        x
    }

    pub fn backward(&mut self, mut dy: Activation<F>) -> Activation<F> {
        if let Some(mask) = self.mask.take() {
            dy.data *= &mask;
        }
        dy
    }
}

#[derive(Debug, Clone, Default)]
pub struct Flatten {
    in_dims: (usize, usize, usize),
}

impl Flatten {
    pub fn forward<F: Scalar>(&mut self, x: Activation<F>) -> Activation<F> {
        let c = x.channels();
        self.in_dims = (x.h, x.w, c);
        let data = x
            .data
            .into_shape_with_order((x.n, x.h * x.w * c))
            .expect("standard layout");
        Activation::new(data, x.n, 1, 1)
    }

    pub fn backward<F: Scalar>(&mut self, dy: Activation<F>) -> Activation<F> {
        let (h, w, c) = self.in_dims;
        let data = dy
            .data
            .into_shape_with_order((dy.n * h * w, c))
            .expect("standard layout");
        Activation::new(data, dy.n, h, w)
    }
}

#[derive(Debug, Clone)]
pub struct Dense<F> {
    /// `(inputs, outputs)`.
    pub weight: Array2<F>,
    pub bias: Array1<F>,
    pub grad_weight: Array2<F>,
    pub grad_bias: Array1<F>,
    input: Option<Array2<F>>,
}

impl<F: Scalar> Dense<F> {
    pub fn new(weight: Array2<F>, bias: Array1<F>) -> Self {
        Self {
            grad_weight: Array2::zeros(weight.raw_dim()),
            grad_bias: Array1::zeros(bias.raw_dim()),
            weight,
            bias,
            input: None,
        }
    }

    pub fn forward(&mut self, x: Activation<F>, pass: &mut Pass) -> Activation<F> {
        let mut y = x.data.dot(&self.weight);
        y += &self.bias;
        if pass.cache {
            self.input = Some(x.data);
        }
        Activation::new(y, x.n, 1, 1)
    }

    pub fn backward(&mut self, dy: Activation<F>) -> Activation<F> {
        let input = self.input.take().expect("forward with cache before backward");
        self.grad_weight = input.t().dot(&dy.data);
        self.grad_bias = dy.data.sum_axis(Axis(0));
        let dx = dy.data.dot(&self.weight.t());
        Activation::new(dx, dy.n, 1, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;

    fn train_pass(rng: &mut ChaCha8Rng) -> Pass<'_> {
        Pass {
            batch_stats: true,
            dropout: Some(rng),
            cache: true,
        }
    }

    #[test]
    fn batchnorm_training_output_is_standardized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = Array2::from_shape_fn((64, 4), |(i, j)| {
            (j as f64 + 1.0) * 3.0 * (rng.random::<f64>() - 0.5) + 10.0 * j as f64 + (i % 3) as f64
        });
        let mut bn = BatchNorm::<f64>::new(4);
        let (xhat, _) = bn.normalize(&data, true);
        for col in xhat.columns() {
            let mean = col.mean().unwrap();
            let var = col.mapv(|v| (v - mean) * (v - mean)).mean().unwrap();
            assert!(mean.abs() <= 1e-6, "mean {mean}");
            assert!((var - 1.0).abs() <= 1e-4, "var {var}");
        }
    }

    #[test]
    fn zero_rate_dropout_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = Activation::new(array![[1.0, -2.0], [3.5, 4.0]], 2, 1, 1);
        let mut d = Dropout::<f64>::new(0.0);
        let y = d.forward(x.clone(), &mut train_pass(&mut rng));
        assert_eq!(y.data, x.data);
    }

    #[test]
    fn dropout_preserves_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Activation::new(Array2::<f64>::ones((20_000, 1)), 20_000, 1, 1);
        let mut d = Dropout::<f64>::new(0.25);
        let y = d.forward(x, &mut train_pass(&mut rng));
        let mean = y.data.mean().unwrap();
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
        let inference = d.forward(
            Activation::new(Array2::<f64>::ones((3, 1)), 3, 1, 1),
            &mut Pass::inference(),
        );
        assert!(inference.data.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn maxpool_floors_odd_dimensions() {
        let data = Array2::from_shape_fn((5 * 3, 1), |(i, _)| i as f64);
        let mut pool = MaxPool2::default();
        let y = pool.forward(Activation::new(data, 1, 5, 3), &mut Pass::inference());
        assert_eq!((y.h, y.w), (2, 1));
        // rows 0-1 × cols 0-1 → max at (1,1) = 4; rows 2-3 → (3,1) = 10
        assert_eq!(y.data.column(0).to_vec(), vec![4.0, 10.0]);
    }

    #[test]
    fn conv_identity_kernel_copies_input() {
        let k = 3;
        let mut weight = Array2::<f64>::zeros((k * k, 1));
        weight[[4, 0]] = 1.0; // centre tap
        let mut conv = Conv2d::new(1, 1, k, weight, Array1::zeros(1));
        let data = Array2::from_shape_fn((12, 1), |(i, _)| i as f64 - 3.0);
        let x = Activation::new(data.clone(), 1, 3, 4);
        let y = conv.forward(x, &mut Pass::inference());
        assert_eq!(y.data, data);
    }
}
