use alloc::format;
use alloc::vec::Vec;
use core::borrow::Borrow;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{accumulate_gradients, adam_step, init_params, AdamState, ModelParams, Mode};
use crate::vectorizer::FeatureVector;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_sizes: Vec<usize>,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: alloc::vec![64, 32],
            dropout_rate: 0.2,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 50,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if self.hidden_sizes.contains(&0) {
            return bad(format!("hidden layer sizes must be positive, got {:?}", self.hidden_sizes));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout rate must be in [0, 1), got {}", self.dropout_rate));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(beta > 0.0 && beta < 1.0) {
                return bad(format!("{name} must be in (0, 1), got {beta}"));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.batch_size == 0 {
            return bad(format!("batch size must be positive, got {}", self.batch_size));
        }
        Ok(())
    }

    /// Input, hidden and output sizes for a network on this config.
    pub fn layer_sizes(&self, inputs: usize, classes: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden_sizes.len() + 2);
        sizes.push(inputs);
        sizes.extend_from_slice(&self.hidden_sizes);
        sizes.push(classes);
        sizes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Mean training loss of every epoch, in train mode.
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch Adam training from a seeded initialization. Samples are
/// reshuffled every epoch.
pub fn train<V: Borrow<FeatureVector>>(data: &[(V, usize)], num_classes: usize, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let Some((first, _)) = data.first() else {
        return Err(Error::EmptyTrainingData);
    };
    let inputs = first.borrow().len();
    let samples: Vec<(Vec<f64>, usize)> = data
        .iter()
        .map(|(v, class)| {
            let v = v.borrow();
            if v.len() != inputs {
                return Err(Error::DimensionMismatch {
                    expected: inputs,
                    found: v.len(),
                });
            }
            if *class >= num_classes {
                return Err(Error::ClassOutOfRange {
                    class: *class,
                    classes: num_classes,
                });
            }
            Ok((v.to_input(), *class))
        })
        .collect::<Result<_>>()?;

    let mut params = init_params(&config.layer_sizes(inputs, num_classes), config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut state = AdamState::new(&params);
    let mut grads = params.zeroed();
    let mode = Mode::Train {
        dropout_rate: config.dropout_rate,
    };
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let (x, class) = &samples[i];
                let (loss, _) = accumulate_gradients(&params, x, *class, mode, Some(&mut rng), &mut grads)?;
                total += loss;
            }
            let scale = 1.0 / batch.len() as f64;
            grads.iter_mut().for_each(|g| *g *= scale);
            adam_step(&mut params, &grads, &mut state, config);
        }
        epoch_losses.push(total / samples.len() as f64);
    }
    Ok(TrainOutcome { params, epoch_losses })
}
