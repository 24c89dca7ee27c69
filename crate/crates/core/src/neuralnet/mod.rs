//! A small fully connected network: ReLU hidden layers, softmax output,
//! inverted dropout between consecutive hidden layers, categorical
//! cross-entropy and Adam.
//!
//! Weight matrices are stored row-major with one row per input unit, so layer
//! `l` maps `layer_sizes[l]` inputs to `layer_sizes[l + 1]` outputs.

mod adam;
mod train;

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use adam::{adam_step, AdamState};
pub use train::{train, TrainConfig, TrainOutcome};

/// Lower clip for the ground-truth probability inside the loss.
pub const PROB_FLOOR: f64 = 1e-12;

/// One dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// `(inputs, outputs)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.inputs, self.outputs)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn weight(&self, input: usize, output: usize) -> f64 {
        self.weights[input * self.outputs + output]
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    fn fill(&mut self, value: f64) {
        self.weights.fill(value);
        self.biases.fill(value);
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(self.biases.iter())
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.biases.iter_mut())
    }

    /// `out = input · W + b`, skipping zero inputs.
    fn affine(&self, input: &[f64]) -> Vec<f64> {
        let mut out = self.biases.clone();
        for (i, &x) in input.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            for (o, w) in out.iter_mut().zip(row) {
                *o += x * w;
            }
        }
        out
    }
}

/// Weights and biases of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    layer_sizes: Vec<usize>,
    layers: Vec<Layer>,
}

fn check_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::InvalidLayerSizes(format!(
            "need at least an input and an output layer, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::InvalidLayerSizes(format!(
            "every layer needs at least one unit, got {layer_sizes:?}"
        )));
    }
    Ok(())
}

impl ModelParams {
    /// All-zero parameters.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        check_sizes(layer_sizes)?;
        let layers = layer_sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            layers,
        })
    }

    /// Rebuilds parameters from flattened per-layer weights (row-major,
    /// inputs × outputs) and biases.
    pub fn from_parts(layer_sizes: &[usize], weights: Vec<Vec<f64>>, biases: Vec<Vec<f64>>) -> Result<Self> {
        let mut params = Self::zeros(layer_sizes)?;
        if weights.len() != params.layers.len() || biases.len() != params.layers.len() {
            return Err(Error::InvalidLayerSizes(format!(
                "expected {} weight and bias blocks, got {} and {}",
                params.layers.len(),
                weights.len(),
                biases.len()
            )));
        }
        for (l, (layer, (w, b))) in params.layers.iter_mut().zip(weights.into_iter().zip(biases)).enumerate() {
            if w.len() != layer.weights.len() || b.len() != layer.biases.len() {
                return Err(Error::InvalidLayerSizes(format!(
                    "layer {l}: expected {}x{} weights and {} biases",
                    layer.inputs, layer.outputs, layer.outputs
                )));
            }
            if w.iter().chain(&b).any(|v| !v.is_finite()) {
                return Err(Error::InvalidLayerSizes(format!("layer {l}: non-finite parameter")));
            }
            layer.weights = w;
            layer.biases = b;
        }
        Ok(params)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Every weight then every bias, layer by layer.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(Layer::params)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(Layer::params_mut)
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    fn same_shape(&self, other: &ModelParams) -> bool {
        self.layer_sizes == other.layer_sizes
    }

    fn zeroed(&self) -> Self {
        let mut z = self.clone();
        z.layers.iter_mut().for_each(|l| l.fill(0.0));
        z
    }
}

/// Gradients share the parameter layout.
pub type Gradients = ModelParams;

/// He-uniform weights, `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`, zero biases.
pub fn init_params(layer_sizes: &[usize], seed: u64) -> Result<ModelParams> {
    let mut params = ModelParams::zeros(layer_sizes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in &mut params.layers {
        let limit = libm::sqrt(6.0 / layer.inputs as f64);
        for w in &mut layer.weights {
            *w = rng.random_range(-limit..limit);
        }
    }
    Ok(params)
}

/// A discrete distribution over classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityDistribution(Vec<f64>);

impl ProbabilityDistribution {
    /// Wraps raw probabilities without normalizing them.
    pub fn new(probs: Vec<f64>) -> Self {
        Self(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, class: usize) -> Option<f64> {
        self.0.get(class).copied()
    }

    /// Index of the largest probability; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl Deref for ProbabilityDistribution {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn softmax(logits: &[f64]) -> ProbabilityDistribution {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| libm::exp(z - max)).collect();
    let total: f64 = exps.iter().sum();
    ProbabilityDistribution(exps.into_iter().map(|e| e / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Infer,
    /// Dropout with the given rate between consecutive hidden layers.
    Train { dropout_rate: f64 },
}

struct Trace {
    /// Input to each layer: the network input, then hidden activations after
    /// dropout.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of the hidden layers.
    hidden_pre: Vec<Vec<f64>>,
    /// Dropout scale per unit, for hidden layers followed by another hidden layer.
    masks: Vec<Option<Vec<f64>>>,
    probs: ProbabilityDistribution,
}

fn check_input(params: &ModelParams, x: &[f64]) -> Result<()> {
    if x.len() != params.input_size() {
        return Err(Error::DimensionMismatch {
            expected: params.input_size(),
            found: x.len(),
        });
    }
    Ok(())
}

fn forward_trace(params: &ModelParams, x: &[f64], mode: Mode, mut rng: Option<&mut dyn RngCore>) -> Result<Trace> {
    check_input(params, x)?;
    let dropout = match mode {
        Mode::Train { dropout_rate } if dropout_rate > 0.0 => dropout_rate,
        _ => 0.0,
    };
    let hidden = params.layers.len() - 1;
    let mut inputs = Vec::with_capacity(params.layers.len());
    let mut hidden_pre = Vec::with_capacity(hidden);
    let mut masks = Vec::with_capacity(hidden);
    inputs.push(x.to_vec());

    for (l, layer) in params.layers.iter().enumerate() {
        let z = layer.affine(&inputs[l]);
        if l == hidden {
            let probs = softmax(&z);
            return Ok(Trace {
                inputs,
                hidden_pre,
                masks,
                probs,
            });
        }
        let mut a: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
        let mask = if dropout > 0.0 && l + 1 < hidden {
            let rng = rng.as_deref_mut().ok_or_else(|| {
                Error::InvalidConfig("train mode with dropout needs a random generator".to_string())
            })?;
            let keep = 1.0 / (1.0 - dropout);
            let m: Vec<f64> = (0..a.len())
                .map(|_| if rng.random::<f64>() < dropout { 0.0 } else { keep })
                .collect();
            a.iter_mut().zip(&m).for_each(|(v, s)| *v *= s);
            Some(m)
        } else {
            None
        };
        hidden_pre.push(z);
        masks.push(mask);
        inputs.push(a);
    }
    unreachable!("the output layer returns")
}

/// Class probabilities for `x`. In train mode the generator drives dropout.
pub fn forward<R: RngCore>(params: &ModelParams, x: &[f64], mode: Mode, rng: &mut R) -> Result<ProbabilityDistribution> {
    Ok(forward_trace(params, x, mode, Some(rng))?.probs)
}

/// Inference-mode forward pass.
pub fn predict_proba(params: &ModelParams, x: &[f64]) -> Result<ProbabilityDistribution> {
    Ok(forward_trace(params, x, Mode::Infer, None)?.probs)
}

/// `-ln(max(p[label], 1e-12))`.
pub fn cross_entropy_loss(probs: &ProbabilityDistribution, label: usize) -> Result<f64> {
    let p = probs.get(label).ok_or(Error::ClassOutOfRange {
        class: label,
        classes: probs.len(),
    })?;
    Ok(-libm::log(p.max(PROB_FLOOR)))
}

#[derive(Debug, Clone)]
pub struct BackwardPass {
    pub loss: f64,
    pub probs: ProbabilityDistribution,
    pub grads: Gradients,
}

/// Loss and exact gradients for one sample. The forward pass runs inside, so
/// the dropout mask used for the gradients is the one that produced the loss.
pub fn backward<R: RngCore>(
    params: &ModelParams,
    x: &[f64],
    label: usize,
    mode: Mode,
    rng: &mut R,
) -> Result<BackwardPass> {
    let mut grads = params.zeroed();
    let (loss, probs) = accumulate_gradients(params, x, label, mode, Some(rng), &mut grads)?;
    Ok(BackwardPass { loss, probs, grads })
}

/// Adds the gradients of one sample into `grads`.
pub(crate) fn accumulate_gradients(
    params: &ModelParams,
    x: &[f64],
    label: usize,
    mode: Mode,
    rng: Option<&mut dyn RngCore>,
    grads: &mut Gradients,
) -> Result<(f64, ProbabilityDistribution)> {
    debug_assert!(params.same_shape(grads));
    if label >= params.num_classes() {
        return Err(Error::ClassOutOfRange {
            class: label,
            classes: params.num_classes(),
        });
    }
    let trace = forward_trace(params, x, mode, rng)?;
    let loss = cross_entropy_loss(&trace.probs, label)?;

    // softmax + cross-entropy: dL/dz = p - onehot
    let mut delta: Vec<f64> = trace.probs.to_vec();
    delta[label] -= 1.0;

    for l in (0..params.layers.len()).rev() {
        let layer = &params.layers[l];
        let input = &trace.inputs[l];
        let g = &mut grads.layers[l];
        for (gb, d) in g.biases.iter_mut().zip(&delta) {
            *gb += d;
        }
        for (i, &a) in input.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row = &mut g.weights[i * layer.outputs..(i + 1) * layer.outputs];
            for (gw, d) in row.iter_mut().zip(&delta) {
                *gw += a * d;
            }
        }
        if l == 0 {
            break;
        }
        let mut upstream = vec![0.0; layer.inputs];
        for (i, u) in upstream.iter_mut().enumerate() {
            let row = &layer.weights[i * layer.outputs..(i + 1) * layer.outputs];
            *u = row.iter().zip(&delta).map(|(w, d)| w * d).sum();
        }
        if let Some(mask) = &trace.masks[l - 1] {
            upstream.iter_mut().zip(mask).for_each(|(u, s)| *u *= s);
        }
        for (u, &z) in upstream.iter_mut().zip(&trace.hidden_pre[l - 1]) {
            if z <= 0.0 {
                *u = 0.0;
            }
        }
        delta = upstream;
    }
    Ok((loss, trace.probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(1)
    }

    #[test]
    fn init_is_deterministic_and_shaped() {
        let a = init_params(&[4, 3, 2], 7).unwrap();
        let b = init_params(&[4, 3, 2], 7).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a, init_params(&[4, 3, 2], 8).unwrap());

        let p = init_params(&[4, 2], 1).unwrap();
        assert_eq!(p.layers().len(), 1);
        assert_eq!(p.layers()[0].shape(), (4, 2));
        assert_eq!(p.layers()[0].biases().len(), 2);
        assert!(p.layers()[0].biases().iter().all(|&b| b == 0.0));

        let big = init_params(&[1368, 64, 32, 3], 1).unwrap();
        let shapes: Vec<_> = big.layers().iter().map(Layer::shape).collect();
        assert_eq!(shapes, vec![(1368, 64), (64, 32), (32, 3)]);
        let limit = libm::sqrt(6.0 / 1368.0);
        assert!(big.layers()[0].weights().iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn invalid_sizes() {
        assert!(matches!(init_params(&[4], 0), Err(Error::InvalidLayerSizes(_))));
        assert!(matches!(init_params(&[4, 0, 2], 0), Err(Error::InvalidLayerSizes(_))));
        assert!(matches!(init_params(&[], 0), Err(Error::InvalidLayerSizes(_))));
    }

    #[test]
    fn zero_params_give_uniform_output() {
        let p = ModelParams::zeros(&[5, 4, 3]).unwrap();
        let out = predict_proba(&p, &[1.0, 2.0, 0.0, 3.0, 1.0]).unwrap();
        for &v in out.iter() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let p = init_params(&[3, 2], 0).unwrap();
        assert_eq!(
            predict_proba(&p, &[1.0]).unwrap_err(),
            Error::DimensionMismatch { expected: 3, found: 1 }
        );
        assert!(backward(&p, &[1.0], 0, Mode::Infer, &mut rng()).is_err());
        assert!(matches!(
            backward(&p, &[1.0, 0.0, 0.0], 2, Mode::Infer, &mut rng()),
            Err(Error::ClassOutOfRange { class: 2, classes: 2 })
        ));
    }

    #[test]
    fn zero_dropout_train_matches_infer_bitwise() {
        let p = init_params(&[6, 5, 4, 3], 3).unwrap();
        let x = [1.0, 0.0, 2.0, 0.5, 0.0, 3.0];
        let a = forward(&p, &x, Mode::Train { dropout_rate: 0.0 }, &mut rng()).unwrap();
        let b = predict_proba(&p, &x).unwrap();
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn dropout_changes_train_output_only_with_two_hidden_layers() {
        let x = [1.0, 0.0, 2.0, 0.5];
        let single = init_params(&[4, 8, 2], 3).unwrap();
        let a = forward(&single, &x, Mode::Train { dropout_rate: 0.5 }, &mut rng()).unwrap();
        assert_eq!(a, predict_proba(&single, &x).unwrap());

        let deep = init_params(&[4, 8, 8, 2], 3).unwrap();
        let outs: Vec<_> = (0..5)
            .map(|s| forward(&deep, &x, Mode::Train { dropout_rate: 0.5 }, &mut ChaCha8Rng::seed_from_u64(s)).unwrap())
            .collect();
        assert!(outs.iter().any(|o| *o != predict_proba(&deep, &x).unwrap()));
    }

    #[test]
    fn loss_values() {
        let ce = |p: Vec<f64>, l| cross_entropy_loss(&ProbabilityDistribution::new(p), l).unwrap();
        assert_eq!(ce(vec![1.0, 0.0], 0), 0.0);
        assert!((ce(vec![0.5, 0.5], 1) - core::f64::consts::LN_2).abs() < 1e-12);
        let clipped = ce(vec![1.0, 0.0], 1);
        assert!(clipped.is_finite());
        assert!((clipped - 27.631021115928547).abs() < 1e-9);
        assert!(cross_entropy_loss(&ProbabilityDistribution::new(vec![1.0]), 1).is_err());
    }

    #[test]
    fn gradients_mirror_params_and_vanish_at_minimum() {
        let mut p = init_params(&[3, 4, 2], 5).unwrap();
        let x = [1.0, 2.0, 0.0];
        let pass = backward(&p, &x, 1, Mode::Infer, &mut rng()).unwrap();
        assert_eq!(pass.grads.layer_sizes(), p.layer_sizes());
        assert_eq!(pass.grads.param_count(), p.param_count());

        // push the output bias so class 1 dominates
        p.layers_mut()[1].biases_mut()[1] = 60.0;
        let pass = backward(&p, &x, 1, Mode::Infer, &mut rng()).unwrap();
        let norm: f64 = pass.grads.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(norm < 1e-20, "norm {norm}");
        assert!(pass.loss < 1e-20);
    }

    proptest! {
        #[test]
        fn softmax_is_a_distribution(seed in any::<u64>(), x in prop::collection::vec(-50.0f64..50.0, 6)) {
            let p = init_params(&[6, 7, 5, 3], seed).unwrap();
            let out = predict_proba(&p, &x).unwrap();
            prop_assert!((out.sum() - 1.0).abs() < 1e-6);
            prop_assert!(out.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
}
