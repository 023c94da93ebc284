use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{CoreError, Result};

/// Default transition width of each filter edge, in Hz.
pub const DEFAULT_TRANSITION_HZ: f64 = 1.0;

const PREDICTOR_ORDER: usize = 16;
const PREDICTOR_FIT_LEN: usize = 1024;

struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    response: Vec<Complex64>,
}

/// Linear-phase FIR band-pass (Hamming-windowed sinc), applied with its
/// delay removed so the output is aligned with the input.
///
/// The kernel is the difference of two unit-DC lowpasses with cutoffs at
/// `hi + t/2` and `lo`, which puts the passband at `[lo + t/2, hi]` and
/// full attenuation below `lo - t/2` and above `hi + t`.
pub struct Bandpass {
    lo_hz: f64,
    hi_hz: f64,
    fs_hz: f64,
    kernel: Vec<f64>,
    plans: Mutex<HashMap<usize, Arc<Plan>>>,
}

impl Bandpass {
    pub fn new(lo_hz: f64, hi_hz: f64, fs_hz: f64) -> Result<Self> {
        Self::with_transition(lo_hz, hi_hz, fs_hz, DEFAULT_TRANSITION_HZ)
    }

    pub fn with_transition(lo_hz: f64, hi_hz: f64, fs_hz: f64, transition_hz: f64) -> Result<Self> {
        let nyquist = fs_hz / 2.0;
        let valid = fs_hz > 0.0
            && fs_hz.is_finite()
            && lo_hz >= 0.0
            && lo_hz < hi_hz
            && hi_hz <= nyquist
            && transition_hz > 0.0;
        if !valid {
            return Err(CoreError::InvalidBand { lo_hz, hi_hz, fs_hz });
        }
        let taps = {
            let n = (3.3 * fs_hz / transition_hz).ceil() as usize;
            n | 1
        };
        let half = taps / 2;
        let upper = hi_hz + transition_hz / 2.0;
        let mut kernel = if upper >= nyquist {
            let mut delta = vec![0.0; taps];
            delta[half] = 1.0;
            delta
        } else {
            windowed_lowpass(upper, fs_hz, taps)
        };
        if lo_hz > 0.0 {
            for (k, l) in kernel.iter_mut().zip(windowed_lowpass(lo_hz, fs_hz, taps)) {
                *k -= l;
            }
        }
        Ok(Self {
            lo_hz,
            hi_hz,
            fs_hz,
            kernel,
            plans: Mutex::new(HashMap::new()),
        })
    }

    pub fn lo_hz(&self) -> f64 {
        self.lo_hz
    }

    pub fn hi_hz(&self) -> f64 {
        self.hi_hz
    }

    pub fn fs_hz(&self) -> f64 {
        self.fs_hz
    }

    /// Symmetric taps, centre at index `len / 2`.
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn apply(&self, signal: &[f64]) -> Vec<f64> {
        let (a, _) = self.apply_pair(signal, None);
        a
    }

    /// Filters every channel, two at a time through one complex transform.
    pub fn apply_all(&self, channels: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(channels.len());
        for pair in channels.chunks(2) {
            let (a, b) = self.apply_pair(&pair[0], pair.get(1).map(Vec::as_slice));
            out.push(a);
            if let Some(b) = b {
                out.push(b);
            }
        }
        out
    }

    fn apply_pair(&self, a: &[f64], b: Option<&[f64]>) -> (Vec<f64>, Option<Vec<f64>>) {
        let len = a.len();
        if len == 0 {
            return (Vec::new(), b.map(|_| Vec::new()));
        }
        let half = self.kernel.len() / 2;
        let size = fast_length(len + 2 * half);
        let plan = self.plan(size);

        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        let ea = extend(a, half);
        for (slot, &re) in buf.iter_mut().zip(&ea) {
            slot.re = re;
        }
        if let Some(b) = b {
            for (slot, &im) in buf.iter_mut().zip(&extend(b, half)) {
                slot.im = im;
            }
        }
        plan.forward.process(&mut buf);
        for (z, r) in buf.iter_mut().zip(&plan.response) {
            *z *= r;
        }
        plan.inverse.process(&mut buf);
        let scale = 1.0 / size as f64;
        let out = &buf[2 * half..2 * half + len];
        let silent = |x: &[f64]| x.iter().all(|&v| v == 0.0);
        let ya = if silent(a) {
            vec![0.0; len]
        } else {
            out.iter().map(|z| z.re * scale).collect()
        };
        let yb = b.map(|b| {
            if silent(b) {
                vec![0.0; len]
            } else {
                out.iter().map(|z| z.im * scale).collect()
            }
        });
        (ya, yb)
    }

    fn plan(&self, size: usize) -> Arc<Plan> {
        let mut plans = self.plans.lock().expect("bandpass plan cache poisoned");
        plans
            .entry(size)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                let forward = planner.plan_fft_forward(size);
                let inverse = planner.plan_fft_inverse(size);
                let mut response = vec![Complex64::new(0.0, 0.0); size];
                for (r, &k) in response.iter_mut().zip(&self.kernel) {
                    *r = Complex64::new(k, 0.0);
                }
                forward.process(&mut response);
                Arc::new(Plan {
                    forward,
                    inverse,
                    response,
                })
            })
            .clone()
    }
}

pub fn bandpass(signal: &[f64], lo_hz: f64, hi_hz: f64, fs_hz: f64) -> Result<Vec<f64>> {
    Ok(Bandpass::new(lo_hz, hi_hz, fs_hz)?.apply(signal))
}

fn windowed_lowpass(cutoff_hz: f64, fs_hz: f64, taps: usize) -> Vec<f64> {
    let half = (taps / 2) as f64;
    let fc = cutoff_hz / fs_hz;
    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let n = i as f64 - half;
            let sinc = if n == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * n).sin() / (PI * n)
            };
            sinc * (0.54 + 0.46 * (PI * n / half).cos())
        })
        .collect();
    let dc: f64 = h.iter().sum();
    for v in &mut h {
        *v /= dc;
    }
    h
}

/// Pads `x` with `n` samples on each side, predicted by a Burg linear
/// predictor fitted to the samples nearest that edge (after removing their
/// mean). Stationary content continues smoothly past the edges instead of
/// meeting a reflection seam, which keeps edge transients small.
fn extend(x: &[f64], n: usize) -> Vec<f64> {
    let fit = x.len().min(PREDICTOR_FIT_LEN);
    let head: Vec<f64> = x[..fit].iter().rev().copied().collect();
    let mut out = predict(&head, n);
    out.reverse();
    out.extend_from_slice(x);
    out.extend(predict(&x[x.len() - fit..], n));
    out
}

/// `n` samples continuing `segment` forwards in time.
fn predict(segment: &[f64], n: usize) -> Vec<f64> {
    let mean = segment.iter().sum::<f64>() / segment.len() as f64;
    let residual: Vec<f64> = segment.iter().map(|v| v - mean).collect();
    let order = PREDICTOR_ORDER.min(residual.len() / 2);
    let a = burg(&residual, order);
    let q = a.len() - 1;
    let mut history = residual[residual.len() - q..].to_vec();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let len = history.len();
        let next: f64 = -(1..=q).map(|j| a[j] * history[len - j]).sum::<f64>();
        history.push(next);
        out.push(next + mean);
    }
    out
}

/// Prediction-error filter `[1, a1, …, ap]` by Burg's method. Stops early
/// when the residual power vanishes, so exactly predictable inputs give a
/// shorter filter.
fn burg(x: &[f64], order: usize) -> Vec<f64> {
    let mut forward = x.to_vec();
    let mut backward = x.to_vec();
    let mut a = vec![1.0];
    for m in 0..order {
        let (mut num, mut den) = (0.0, 0.0);
        for t in m + 1..x.len() {
            num += forward[t] * backward[t - 1];
            den += forward[t] * forward[t] + backward[t - 1] * backward[t - 1];
        }
        if den <= f64::MIN_POSITIVE {
            break;
        }
        let k = -2.0 * num / den;
        a.push(0.0);
        let prev = a.clone();
        for i in 1..a.len() {
            a[i] = prev[i] + k * prev[a.len() - 1 - i];
        }
        for t in (m + 1..x.len()).rev() {
            let f = forward[t];
            let b = backward[t - 1];
            forward[t] = f + k * b;
            backward[t] = b + k * f;
        }
    }
    a
}

/// Smallest length ≥ `n` whose only prime factors are 2, 3 and 5.
fn fast_length(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}
