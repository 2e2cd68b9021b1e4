//! Finite-difference checks of the analytic backward passes.
//!
//! A layer is reduced to the scalar `L = Σ r·y` with a fixed random `r`, so
//! the upstream gradient is `r` itself. Every input and parameter entry is
//! perturbed by `±STEP` and the central difference is compared against the
//! analytic gradient.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::network::{Layer, LayerKind, Params};
use super::ops::{self, Mode};
use super::{Network, NnError, Tensor};

pub const STEP: f64 = 1e-5;
/// Magnitudes below this are compared absolutely.
pub const REL_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
}

impl GradCheckReport {
    fn record(&mut self, analytic: f64, numeric: f64) {
        self.max_rel_error = self.max_rel_error.max(rel_error(analytic, numeric));
        self.checked += 1;
    }
}

pub fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

/// Distinct values spread evenly over (-1, 1), shuffled. Neighbours differ by
/// `2/n`, far more than `STEP`, so max-pool winners and ReLU signs never flip
/// under perturbation.
pub fn separated_input(shape: &[usize], rng: &mut impl Rng) -> Tensor {
    let n: usize = shape.iter().product();
    let mut data: Vec<f64> = (0..n).map(|k| (2.0 * k as f64 + 1.0) / n as f64 - 1.0).collect();
    data.shuffle(rng);
    Tensor::from_vec(shape, data).expect("shape matches data")
}

fn uniform(shape: &[usize], rng: &mut impl Rng) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("shape matches data")
}

fn random_params(kind: LayerKind, input_shape: &[usize], rng: &mut impl Rng) -> Option<Params> {
    let (w, b) = match kind {
        LayerKind::Conv2d {
            out_channels, kernel, ..
        } => ([out_channels, input_shape[1], kernel, kernel].to_vec(), out_channels),
        LayerKind::Dense { out_features } => ([out_features, input_shape[1]].to_vec(), out_features),
        _ => return None,
    };
    Some(Params {
        weight: uniform(&w, rng),
        bias: uniform(&[b], rng),
    })
}

#[derive(Clone, Copy)]
enum Slot {
    Input,
    Weight,
    Bias,
}

fn nudge(layer: &mut Layer, x: &mut Tensor, slot: Slot, i: usize, delta: f64) {
    let t = match slot {
        Slot::Input => x,
        Slot::Weight => &mut layer.params.as_mut().expect("parametric layer").weight,
        Slot::Bias => &mut layer.params.as_mut().expect("parametric layer").bias,
    };
    t.data_mut()[i] += delta;
}

/// Checks one layer on a random input of `input_shape` (batch first).
/// Dropout is run in training mode with the same mask for every evaluation.
pub fn check_layer(kind: LayerKind, input_shape: &[usize], seed: u64) -> Result<GradCheckReport, NnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = separated_input(input_shape, &mut rng);
    let base = Layer::new(kind, random_params(kind, input_shape, &mut rng));
    let mask_seed = rng.random::<u64>();

    let run = |layer: &mut Layer, x: Tensor| layer.forward(x, Mode::Train, &mut ChaCha8Rng::seed_from_u64(mask_seed));
    let mut layer = base.clone();
    let y = run(&mut layer, x.clone())?;
    let r = uniform(y.shape(), &mut rng);
    let dx = layer.backward(&r)?;
    let loss = |layer: &Layer, x: &Tensor| -> Result<f64, NnError> {
        let y = run(&mut layer.clone(), x.clone())?;
        Ok(y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum())
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
    };
    let mut slots = vec![(Slot::Input, dx)];
    if let Some(g) = layer.grads.take() {
        slots.push((Slot::Weight, g.weight));
        slots.push((Slot::Bias, g.bias));
    }
    for (slot, analytic) in slots {
        for (i, &a) in analytic.data().iter().enumerate() {
            let (mut lp, mut xp) = (base.clone(), x.clone());
            nudge(&mut lp, &mut xp, slot, i, STEP);
            let (mut lm, mut xm) = (base.clone(), x.clone());
            nudge(&mut lm, &mut xm, slot, i, -STEP);
            let numeric = (loss(&lp, &xp)? - loss(&lm, &xm)?) / (2.0 * STEP);
            report.record(a, numeric);
        }
    }
    Ok(report)
}

/// Checks the gradient of mean softmax cross-entropy with respect to logits.
pub fn check_cross_entropy(batch: usize, classes: usize, seed: u64) -> Result<GradCheckReport, NnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let logits = uniform(&[batch, classes], &mut rng);
    let mut logits = Tensor::from_vec(&[batch, classes], logits.data().iter().map(|v| 4.0 * v).collect())?;
    let labels: Vec<usize> = (0..batch).map(|_| rng.random_range(0..classes)).collect();
    let targets = ops::one_hot(&labels, classes);
    let (_, grad) = ops::softmax_cross_entropy(&logits, &targets)?;
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
    };
    for (i, &a) in grad.data().iter().enumerate() {
        logits.data_mut()[i] += STEP;
        let lp = ops::softmax_cross_entropy(&logits, &targets)?.0;
        logits.data_mut()[i] -= 2.0 * STEP;
        let lm = ops::softmax_cross_entropy(&logits, &targets)?.0;
        logits.data_mut()[i] += STEP;
        report.record(a, (lp - lm) / (2.0 * STEP));
    }
    Ok(report)
}

/// End-to-end check of a whole network under cross-entropy, covering every
/// parameter tensor.
pub fn check_network(net: &Network, batch: usize, seed: u64) -> Result<GradCheckReport, NnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [c, h, w] = net.input_shape;
    let x = separated_input(&[batch, c, h, w], &mut rng);
    let labels: Vec<usize> = (0..batch).map(|_| rng.random_range(0..net.class_count)).collect();
    let targets = ops::one_hot(&labels, net.class_count);
    let mask_seed = rng.random::<u64>();
    let loss_and_grad = |net: &mut Network| -> Result<(f64, Tensor), NnError> {
        let logits = net.forward(x.clone(), Mode::Train, &mut ChaCha8Rng::seed_from_u64(mask_seed))?;
        ops::softmax_cross_entropy(&logits, &targets)
    };

    let mut work = net.clone();
    let (_, grad) = loss_and_grad(&mut work)?;
    work.backward(&grad)?;
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
    };
    for (li, layer) in work.layers.iter().enumerate() {
        let Some(g) = &layer.grads else { continue };
        for (is_bias, analytic) in [(false, &g.weight), (true, &g.bias)] {
            for (i, &a) in analytic.data().iter().enumerate() {
                let eval = |delta: f64| -> Result<f64, NnError> {
                    let mut n = net.clone();
                    let p = n.layers[li].params.as_mut().expect("parametric layer");
                    let t = if is_bias { &mut p.bias } else { &mut p.weight };
                    t.data_mut()[i] += delta;
                    Ok(loss_and_grad(&mut n)?.0)
                };
                let numeric = (eval(STEP)? - eval(-STEP)?) / (2.0 * STEP);
                report.record(a, numeric);
            }
        }
    }
    Ok(report)
}
