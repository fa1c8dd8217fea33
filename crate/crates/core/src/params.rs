//! Named parameter storage shared by the models and the optimizer.
//!
//! Each parameter owns its value and a persistent gradient accumulator.
//! Registration order is construction order and is the canonical order for
//! checkpoints and optimizer state.

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::tape::{BufId, Tape};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamId(pub usize);

#[derive(Clone, Debug)]
pub struct ParamEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct ParamSet {
    entries: Vec<ParamEntry>,
    index: HashMap<String, usize>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn add(&mut self, name: &str, rows: usize, cols: usize, value: Vec<f64>) -> Result<ParamId> {
        if value.len() != rows * cols {
            return Err(Error::Contract(format!(
                "param '{name}' {rows}x{cols} wants {} values, got {}",
                rows * cols,
                value.len()
            )));
        }
        if self.index.contains_key(name) {
            return Err(Error::Contract(format!("duplicate parameter name '{name}'")));
        }
        let id = self.entries.len();
        self.index.insert(name.to_string(), id);
        self.entries.push(ParamEntry {
            name: name.to_string(),
            rows,
            cols,
            grad: vec![0.0; value.len()],
            value,
        });
        Ok(ParamId(id))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, id: ParamId) -> &ParamEntry {
        &self.entries[id.0]
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn by_name(&self, name: &str) -> Option<&ParamEntry> {
        self.index.get(name).map(|&i| &self.entries[i])
    }

    pub fn set_value(&mut self, id: ParamId, value: Vec<f64>) -> Result<()> {
        let e = &mut self.entries[id.0];
        if value.len() != e.value.len() {
            return Err(Error::Contract(format!(
                "param '{}' value length {} vs {}",
                e.name,
                value.len(),
                e.value.len()
            )));
        }
        e.value = value;
        Ok(())
    }

    pub fn set_value_by_name(&mut self, name: &str, value: Vec<f64>) -> Result<()> {
        match self.index.get(name) {
            Some(&i) => self.set_value(ParamId(i), value),
            None => Err(Error::Input(format!("unknown parameter '{name}'"))),
        }
    }

    /// Total scalar parameter count.
    pub fn param_count(&self) -> usize {
        self.entries.iter().map(|e| e.value.len()).sum()
    }

    pub fn zero_grads(&mut self) {
        for e in &mut self.entries {
            e.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Registers every parameter on a tape; the returned buffer ids are
    /// indexed by `ParamId`.
    pub fn register_all(&self, tape: &mut Tape) -> Result<Vec<BufId>> {
        self.entries
            .iter()
            .map(|e| tape.input(e.rows, e.cols, e.value.clone()))
            .collect()
    }

    /// Adds the tape's gradients into the persistent accumulators.
    pub fn accumulate_grads(&mut self, tape: &Tape, bufs: &[BufId]) {
        for (e, &b) in self.entries.iter_mut().zip(bufs) {
            if let Some(g) = tape.grad(b) {
                for (acc, v) in e.grad.iter_mut().zip(g) {
                    *acc += v;
                }
            }
        }
    }

    /// Mutable (value, grad) views for the optimizer.
    pub fn entries_mut(&mut self) -> &mut [ParamEntry] {
        &mut self.entries
    }
}

/// Glorot-uniform initialization: U(-l, l) with l = sqrt(6 / (fan_in + fan_out)).
pub fn glorot_uniform(rows: usize, cols: usize, stream: &mut Stream) -> Vec<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    (0..rows * cols).map(|_| stream.uniform(-limit, limit)).collect()
}

/// Identity matrix values for an n x n parameter.
pub fn identity_init(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    v
}
