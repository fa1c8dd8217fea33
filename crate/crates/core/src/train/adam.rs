//! Adam optimizer over a `ParamSet`.
//!
//! Moment buffers are indexed by parameter registration order, the same
//! canonical order checkpoints use. `step` consumes the gradients currently
//! accumulated on the set; the caller decides when to zero them.

use crate::error::{Error, Result};
use crate::params::ParamSet;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamParams {
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::Config(format!(
                "learning rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must be in [0, 1), got {b}")));
            }
        }
        if !self.eps.is_finite() || self.eps <= 0.0 {
            return Err(Error::Config(format!("eps must be positive, got {}", self.eps)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    /// Zeroed moments shaped like the given parameter set.
    pub fn new(params: &ParamSet) -> Self {
        let shapes: Vec<usize> = params.entries().iter().map(|e| e.value.len()).collect();
        AdamState {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update from the gradients stored on `params`.
    pub fn step(&mut self, params: &mut ParamSet, h: &AdamParams) -> Result<()> {
        if self.m.len() != params.len() {
            return Err(Error::Contract(format!(
                "optimizer state holds {} parameters, set holds {}",
                self.m.len(),
                params.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - h.beta1.powi(t);
        let bc2 = 1.0 - h.beta2.powi(t);
        for (entry, (m, v)) in params
            .entries_mut()
            .iter_mut()
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            if entry.grad.len() != m.len() {
                return Err(Error::Contract(format!(
                    "parameter {} changed size under the optimizer",
                    entry.name
                )));
            }
            for ((w, &g), (mi, vi)) in entry
                .value
                .iter_mut()
                .zip(entry.grad.iter())
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                if !g.is_finite() {
                    return Err(Error::NonFinite {
                        what: "gradient",
                        name: entry.name.clone(),
                    });
                }
                *mi = h.beta1 * *mi + (1.0 - h.beta1) * g;
                *vi = h.beta2 * *vi + (1.0 - h.beta2) * g * g;
                let mh = *mi / bc1;
                let vh = *vi / bc2;
                *w -= h.learning_rate * mh / (vh.sqrt() + h.eps);
            }
        }
        Ok(())
    }
}
