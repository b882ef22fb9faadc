//! Adam with bias-corrected moment estimates.

use crate::error::{Error, Result};
use crate::nn::{MlpGrads, MlpParams};

/// Adam hyperparameters. Defaults: lr 0.001, beta1 0.9, beta2 0.999, eps 1e-8.
#[derive(Clone, Copy, Debug)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamParams {
    pub fn with_lr(lr: f64) -> AdamParams {
        AdamParams {
            lr,
            ..AdamParams::default()
        }
    }
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

struct Slot {
    m: Vec<f64>,
    v: Vec<f64>,
}

/// Optimizer state over an ordered list of parameter tensors.
///
/// Moment buffers are allocated on the first step and must see the same
/// tensor layout on every subsequent step.
pub struct AdamState {
    hp: AdamParams,
    t: u64,
    slots: Vec<Slot>,
}

impl AdamState {
    pub fn new(hp: AdamParams) -> AdamState {
        AdamState {
            hp,
            t: 0,
            slots: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn hyperparameters(&self) -> AdamParams {
        self.hp
    }

    /// One Adam update over flat parameter views. Non-finite gradients abort
    /// the step before any state is touched.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::shape(format!(
                "{} parameter tensors vs {} gradient tensors",
                params.len(),
                grads.len()
            )));
        }
        for (p, g) in params.iter().zip(grads) {
            if p.len() != g.len() {
                return Err(Error::shape(format!(
                    "parameter tensor of length {} vs gradient of length {}",
                    p.len(),
                    g.len()
                )));
            }
            if !g.iter().all(|v| v.is_finite()) {
                return Err(Error::validation(
                    "non-finite gradient, step aborted".to_string(),
                ));
            }
        }
        if self.slots.is_empty() {
            self.slots = grads
                .iter()
                .map(|g| Slot {
                    m: vec![0.0; g.len()],
                    v: vec![0.0; g.len()],
                })
                .collect();
        } else if self.slots.len() != grads.len()
            || self
                .slots
                .iter()
                .zip(grads)
                .any(|(s, g)| s.m.len() != g.len())
        {
            return Err(Error::contract(
                "optimizer state was initialized for a different tensor layout".to_string(),
            ));
        }

        self.t += 1;
        let bc1 = 1.0 - self.hp.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.hp.beta2.powi(self.t as i32);
        for ((slot, p), g) in self.slots.iter_mut().zip(params.iter_mut()).zip(grads) {
            for i in 0..g.len() {
                let grad = g[i];
                slot.m[i] = self.hp.beta1 * slot.m[i] + (1.0 - self.hp.beta1) * grad;
                slot.v[i] = self.hp.beta2 * slot.v[i] + (1.0 - self.hp.beta2) * grad * grad;
                let m_hat = slot.m[i] / bc1;
                let v_hat = slot.v[i] / bc2;
                p[i] -= self.hp.lr * m_hat / (v_hat.sqrt() + self.hp.epsilon);
            }
        }
        Ok(())
    }

    /// Convenience step over one network's parameters.
    pub fn step_mlp(&mut self, params: &mut MlpParams, grads: &MlpGrads) -> Result<()> {
        let mut p = params.param_slices_mut();
        let g = grads.grad_slices();
        self.step(&mut p, &g)
    }
}
