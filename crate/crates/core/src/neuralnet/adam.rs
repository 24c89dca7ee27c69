use super::{Gradients, ModelParams, TrainConfig};

/// First and second moment estimates, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: ModelParams,
    v: ModelParams,
    t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            m: params.zeroed(),
            v: params.zeroed(),
            t: 0,
        }
    }

    pub fn timestep(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &ModelParams {
        &self.m
    }

    pub fn second_moment(&self) -> &ModelParams {
        &self.v
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(params: &mut ModelParams, grads: &Gradients, state: &mut AdamState, config: &TrainConfig) {
    assert!(
        params.same_shape(grads) && params.same_shape(&state.m),
        "adam_step: parameter, gradient and state shapes differ"
    );
    state.t += 1;
    let t = state.t as f64;
    let (b1, b2) = (config.beta1, config.beta2);
    let correct1 = 1.0 - libm::pow(b1, t);
    let correct2 = 1.0 - libm::pow(b2, t);
    let lr = config.learning_rate;
    let eps = config.epsilon;

    let updates = params
        .iter_mut()
        .zip(grads.iter())
        .zip(state.m.iter_mut().zip(state.v.iter_mut()));
    for ((p, &g), (m, v)) in updates {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / correct1;
        let v_hat = *v / correct2;
        *p -= lr * m_hat / (libm::sqrt(v_hat) + eps);
    }
}
