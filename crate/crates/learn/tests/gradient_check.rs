//! Analytic back-propagation against central finite differences on a
//! miniature network (4×4×2 input, 3 filters, dense 5), in f64.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topoeeg_learn::cnn::{Activation, Layer, Pass};
use topoeeg_learn::{CnnArchitecture, Network, SampleShape};

const STEP: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;
// Gradients below this magnitude are compared absolutely.
const FLOOR: f64 = 1e-6;

fn mini_arch() -> CnnArchitecture {
    CnnArchitecture {
        input: SampleShape::new(4, 4, 2),
        conv_filters: 3,
        kernel: 3,
        dense_units: 5,
        conv_dropout: 0.25,
        dense_dropout: 0.2,
        classes: 2,
    }
}

fn randomized_network(seed: u64) -> Network<f64> {
    let mut net = Network::<f64>::init(mini_arch(), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    for layer in net.layers_mut() {
        if let Layer::BatchNorm(bn) = layer {
            bn.gamma.mapv_inplace(|_| rng.random_range(0.5..1.5));
            bn.beta.mapv_inplace(|_| rng.random_range(-0.5..0.5));
            bn.running_mean.mapv_inplace(|_| rng.random_range(-0.3..0.3));
            bn.running_var.mapv_inplace(|_| rng.random_range(0.5..2.0));
        }
    }
    net
}

fn inputs(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|_| (0..32).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let labels = (0..n).map(|i| i % 2).collect();
    (samples, labels)
}

fn pass(batch_stats: bool) -> Pass<'static> {
    Pass {
        batch_stats,
        dropout: None,
        cache: false,
    }
}

fn loss(net: &mut Network<f64>, samples: &[Vec<f64>], labels: &[usize], batch_stats: bool) -> f64 {
    let x = net.batch(samples.iter().map(Vec::as_slice)).unwrap();
    net.loss(x, labels, &mut pass(batch_stats)).unwrap()
}

fn analytic(
    net: &mut Network<f64>,
    samples: &[Vec<f64>],
    labels: &[usize],
    batch_stats: bool,
) -> (Vec<Vec<f64>>, Activation<f64>) {
    let x = net.batch(samples.iter().map(Vec::as_slice)).unwrap();
    let (_, dx) = net.loss_and_backward(x, labels, &mut pass(batch_stats)).unwrap();
    let mut grads = Vec::new();
    net.visit_params(|_, g| grads.push(g.to_vec()));
    (grads, dx)
}

fn nudge(net: &mut Network<f64>, slot: usize, index: usize, delta: f64) {
    let mut s = 0;
    net.visit_params(|v, _| {
        if s == slot {
            v[index] += delta;
        }
        s += 1;
    });
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(FLOOR)
}

/// Returns the worst relative error over all parameters and inputs.
fn check(batch_stats: bool) -> f64 {
    let mut net = randomized_network(5);
    let (samples, labels) = inputs(3, 17);
    let (grads, dx) = analytic(&mut net.clone(), &samples, &labels, batch_stats);

    let mut worst: f64 = 0.0;
    for (slot, g) in grads.iter().enumerate() {
        for (index, &analytic) in g.iter().enumerate() {
            let mut plus = net.clone();
            nudge(&mut plus, slot, index, STEP);
            let mut minus = net.clone();
            nudge(&mut minus, slot, index, -STEP);
            let numeric = (loss(&mut plus, &samples, &labels, batch_stats)
                - loss(&mut minus, &samples, &labels, batch_stats))
                / (2.0 * STEP);
            let err = relative_error(analytic, numeric);
            assert!(
                err <= TOLERANCE,
                "param slot {slot} index {index}: analytic {analytic:e} numeric {numeric:e}"
            );
            worst = worst.max(err);
        }
    }

    let dx = dx.data.as_slice().unwrap().to_vec();
    for s in 0..samples.len() {
        for j in 0..samples[s].len() {
            let mut up = samples.clone();
            up[s][j] += STEP;
            let mut down = samples.clone();
            down[s][j] -= STEP;
            let numeric = (loss(&mut net, &up, &labels, batch_stats)
                - loss(&mut net, &down, &labels, batch_stats))
                / (2.0 * STEP);
            let analytic = dx[s * 32 + j];
            let err = relative_error(analytic, numeric);
            assert!(
                err <= TOLERANCE,
                "input {s}/{j}: analytic {analytic:e} numeric {numeric:e}"
            );
            worst = worst.max(err);
        }
    }
    worst
}

#[test]
fn gradients_match_finite_differences_with_running_statistics() {
    let worst = check(false);
    println!("max relative error (inference-mode batch norm): {worst:.3e}");
}

#[test]
fn gradients_match_finite_differences_with_batch_statistics() {
    let worst = check(true);
    println!("max relative error (training-mode batch norm): {worst:.3e}");
}
