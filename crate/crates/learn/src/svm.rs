//! Binary RBF-kernel support vector machine trained by sequential minimal
//! optimization.
//!
//! The dual problem
//!
//! ```text
//! min ½ αᵀQα − eᵀα   s.t.  0 ≤ αᵢ ≤ C,  yᵀα = 0,   Qᵢⱼ = yᵢyⱼK(xᵢ, xⱼ)
//! ```
//!
//! is solved two multipliers at a time. The working pair is chosen by the
//! maximal-violation rule for the first index and second-order gain for the
//! second. Iteration stops when the largest KKT gap `m(α) − M(α)` falls below
//! the configured tolerance.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{LearnError, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Kernel width in `K(x, y) = exp(−‖x − y‖² / (2σ²))`.
    pub sigma: f64,
    /// LIBSVM-style `γ` in `exp(−γ‖x − y‖²)`. Overrides `sigma` when set.
    pub gamma: Option<f64>,
    /// Box constraint.
    pub c: f64,
    /// KKT tolerance on the maximal violating pair.
    pub tolerance: f64,
    /// Iteration budget, in units of one update per training sample.
    pub max_passes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            sigma: 0.4,
            gamma: None,
            c: 1.0,
            tolerance: 1e-3,
            max_passes: 100,
        }
    }
}

impl SvmConfig {
    pub fn gamma(&self) -> f64 {
        self.gamma
            .unwrap_or_else(|| 1.0 / (2.0 * self.sigma * self.sigma))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(LearnError::InvalidConfig(format!("gamma must be > 0, got {g}")));
            }
        } else if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(LearnError::InvalidConfig(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(LearnError::InvalidConfig(format!("C must be > 0, got {}", self.c)));
        }
        if !(self.tolerance > 0.0) {
            return Err(LearnError::InvalidConfig("tolerance must be > 0".into()));
        }
        Ok(())
    }
}

/// A trained classifier. Keeps only the support vectors for prediction, plus
/// the full multiplier vector for diagnostics.
#[derive(Debug, Clone)]
pub struct SvmModel {
    gamma: f64,
    dim: usize,
    /// Support vectors, row-major.
    support: Vec<f64>,
    /// `αᵢyᵢ` for each support vector.
    coef: Vec<f64>,
    bias: f64,
    /// Multipliers for every training sample, in training order.
    pub alphas: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl SvmModel {
    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn support_vector_count(&self) -> usize {
        self.coef.len()
    }

    /// `Σ αᵢyᵢK(xᵢ, x) + b`.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(LearnError::ShapeMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut sum = self.bias;
        for (sv, &c) in self.support.chunks_exact(self.dim.max(1)).zip(&self.coef) {
            sum += c * rbf(self.gamma, sv, x);
        }
        Ok(sum)
    }

    /// Class 1 when the decision value is non-negative, class 0 otherwise.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(usize::from(self.decision(x)? >= 0.0))
    }
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum();
    (-gamma * d2).exp()
}

/// Trains on labels 0/1 (mapped to −1/+1). A model is returned even when
/// the iteration budget runs out; check [`SvmModel::converged`].
pub fn svm_fit(train: &Dataset, config: &SvmConfig) -> Result<SvmModel> {
    config.validate()?;
    if train.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    let y: Vec<f64> = train
        .labels()
        .iter()
        .map(|&l| match l {
            0 => Ok(-1.0),
            1 => Ok(1.0),
            label => Err(LearnError::NonBinaryLabel { label }),
        })
        .collect::<Result<_>>()?;

    let n = train.len();
    let gamma = config.gamma();
    let kernel = gram(train, gamma);
    let k = |i: usize, j: usize| kernel[i * n + j];
    let c = config.c;

    let mut alpha = vec![0.0; n];
    // Gradient of the dual objective: G = Qα − e.
    let mut grad = vec![-1.0; n];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let max_iter = config.max_passes.saturating_mul(n.max(1));
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        // First index: maximal violation over I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if y[t] > 0.0 {
                if !upper(alpha[t]) && -grad[t] >= gmax {
                    gmax = -grad[t];
                    i_sel = Some(t);
                }
            } else if !lower(alpha[t]) && grad[t] >= gmax {
                gmax = grad[t];
                i_sel = Some(t);
            }
        }
        // Second index: best second-order decrease over I_low.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best_obj = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..n {
                let (active, g) = if y[t] > 0.0 {
                    (!lower(alpha[t]), grad[t])
                } else {
                    (!upper(alpha[t]), -grad[t])
                };
                if !active {
                    continue;
                }
                if g >= gmax2 {
                    gmax2 = g;
                }
                let grad_diff = gmax + g;
                if grad_diff > 0.0 {
                    let quad = k(i, i) + k(t, t) - 2.0 * k(i, t);
                    let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= best_obj {
                        best_obj = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let (i, j) = match (i_sel, j_sel) {
            (Some(i), Some(j)) if gmax + gmax2 >= config.tolerance => (i, j),
            _ => {
                converged = true;
                break;
            }
        };
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let kij = k(i, j);
        if y[i] != y[j] {
            let quad = (k(i, i) + k(j, j) + 2.0 * (y[i] * y[j] * kij)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (k(i, i) + k(j, j) - 2.0 * (y[i] * y[j] * kij)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(t, i) * di + y[j] * k(t, j) * dj);
        }
    }

    let rho = compute_rho(&y, &alpha, &grad, c);

    let dim = train.dim();
    let mut support = Vec::new();
    let mut coef = Vec::new();
    for (idx, &a) in alpha.iter().enumerate() {
        if a > 0.0 {
            support.extend_from_slice(train.sample(idx));
            coef.push(a * y[idx]);
        }
    }
    Ok(SvmModel {
        gamma,
        dim,
        support,
        coef,
        bias: -rho,
        alphas: alpha,
        converged,
        iterations,
    })
}

/// Offset from the free multipliers (their mean `yᵢGᵢ`) or, when every
/// multiplier sits at a bound, the midpoint of the feasible interval.
fn compute_rho(y: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut sum_free = 0.0;
    for t in 0..y.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

fn gram(data: &Dataset, gamma: f64) -> Vec<f64> {
    let n = data.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        let xi = data.sample(i);
        for j in 0..i {
            let v = rbf(gamma, xi, data.sample(j));
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}
