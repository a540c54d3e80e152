use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

/// A named trainable tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub value: Array2<T>,
    /// Whether decoupled weight decay applies (weights yes; biases and
    /// mixing scalars no).
    pub decay: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet<T> {
    pub params: Vec<Param<T>>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn push(&mut self, name: impl Into<String>, value: Array2<T>, decay: bool) -> usize {
        self.params.push(Param {
            name: name.into(),
            value,
            decay,
        });
        self.params.len() - 1
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Param<T>> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn values(&self) -> Vec<Array2<T>> {
        self.params.iter().map(|p| p.value.clone()).collect()
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Bias-corrected Adam with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    first: Vec<Array2<T>>,
    second: Vec<Array2<T>>,
    step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &ParamSet<T>, config: AdamConfig) -> Self {
        let zeros = || {
            params
                .params
                .iter()
                .map(|p| Array2::zeros(p.value.raw_dim()))
                .collect()
        };
        AdamState {
            config,
            first: zeros(),
            second: zeros(),
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update. Nothing is modified if any gradient is non-finite.
    pub fn step(&mut self, params: &mut ParamSet<T>, grads: &[Array2<T>]) -> Result<()> {
        if grads.len() != params.len() || self.first.len() != params.len() {
            return Err(Error::Config(format!(
                "{} gradients for {} parameters",
                grads.len(),
                params.len()
            )));
        }
        for (p, g) in params.params.iter().zip(grads) {
            if p.value.dim() != g.dim() {
                return Err(Error::Shape {
                    op: "adam_step",
                    lhs: p.value.dim(),
                    rhs: g.dim(),
                });
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteGradient(p.name.clone()));
            }
        }

        self.step += 1;
        let cfg = self.config;
        let (b1, b2): (T, T) = (c(cfg.beta1), c(cfg.beta2));
        let bc1: T = c(1.0 - cfg.beta1.powi(self.step as i32));
        let bc2: T = c(1.0 - cfg.beta2.powi(self.step as i32));
        let lr: T = c(cfg.learning_rate);
        let eps: T = c(cfg.eps);
        let shrink: T = c(1.0 - cfg.learning_rate * cfg.weight_decay);

        for ((p, g), (m, v)) in params
            .params
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut().zip(self.second.iter_mut()))
        {
            let decay = p.decay && cfg.weight_decay != 0.0;
            Zip::from(&mut p.value)
                .and(g)
                .and(m)
                .and(v)
                .for_each(|w, &gi, mi, vi| {
                    *mi = b1 * *mi + (T::one() - b1) * gi;
                    *vi = b2 * *vi + (T::one() - b2) * gi * gi;
                    if decay {
                        *w = *w * shrink;
                    }
                    let mhat = *mi / bc1;
                    let vhat = *vi / bc2;
                    *w = *w - lr * mhat / (vhat.sqrt() + eps);
                });
        }
        Ok(())
    }
}
