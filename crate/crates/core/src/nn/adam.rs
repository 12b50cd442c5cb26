//! Adam with bias-corrected moments.
//!
//! Entries whose gradient is exactly zero in a step keep their weight; their
//! moments still decay. A zero gradient therefore never moves a parameter,
//! regardless of accumulated momentum.

use super::dense::{DenseNet, Gradients};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.0005,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    config: AdamConfig,
    first: Gradients,
    second: Gradients,
    step: u64,
}

impl AdamState {
    pub fn new(net: &DenseNet, config: AdamConfig) -> Self {
        Self {
            config,
            first: Gradients::zeros_like(net),
            second: Gradients::zeros_like(net),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn first_moment(&self) -> &Gradients {
        &self.first
    }

    pub fn second_moment(&self) -> &Gradients {
        &self.second
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.config.learning_rate = lr;
    }
}

/// Applies one Adam update to `net` in place.
pub fn adam_step(net: &mut DenseNet, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    if !grads.is_congruent(net) || !state.first.is_congruent(net) {
        return Err(Error::Shape(
            "gradients or optimizer state do not match the network".into(),
        ));
    }
    if let Some(layer) = grads.first_non_finite() {
        return Err(Error::Training {
            layer,
            message: "non-finite gradient".into(),
        });
    }

    state.step += 1;
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);

    for (idx, layer) in net.layers_mut().iter_mut().enumerate() {
        let g = &grads.layers[idx];
        let m = &mut state.first.layers[idx];
        let v = &mut state.second.layers[idx];
        update(
            layer.weights_mut(),
            &g.weights,
            &mut m.weights,
            &mut v.weights,
            (learning_rate, beta1, beta2, epsilon, c1, c2),
        );
        update(
            layer.bias_mut(),
            &g.bias,
            &mut m.bias,
            &mut v.bias,
            (learning_rate, beta1, beta2, epsilon, c1, c2),
        );
        if layer
            .weights()
            .iter()
            .chain(layer.bias())
            .any(|w| !w.is_finite())
        {
            return Err(Error::Training {
                layer: idx,
                message: "weights became non-finite".into(),
            });
        }
    }
    Ok(())
}

#[inline]
fn update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    (lr, b1, b2, eps, c1, c2): (f64, f64, f64, f64, f64, f64),
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        if g == 0.0 {
            continue;
        }
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}
