use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numcore::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
struct Slot {
    name: String,
    value: Tensor,
    grad: Tensor,
    // Adam moments
    m: Tensor,
    v: Tensor,
    steps: u64,
}

/// Named trainable tensors with paired gradient and optimizer buffers.
#[derive(Debug, Clone, Default)]
pub struct ParameterStore {
    slots: Vec<Slot>,
    index: HashMap<String, ParamId>,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, value: Tensor) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(Error::Config(format!("duplicate parameter name '{name}'")));
        }
        let (r, c) = value.shape();
        let id = ParamId(self.slots.len());
        self.slots.push(Slot {
            name: name.to_string(),
            value,
            grad: Tensor::zeros(r, c),
            m: Tensor::zeros(r, c),
            v: Tensor::zeros(r, c),
            steps: 0,
        });
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.slots.len()).map(ParamId)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.slots[id.0].name
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.slots[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.slots[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.slots[id.0].grad
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.slots[id.0].grad
    }

    pub fn zero_grads(&mut self) {
        for s in &mut self.slots {
            s.grad.fill(0.0);
        }
    }

    pub(crate) fn moments_mut(&mut self, id: ParamId) -> (&mut Tensor, &Tensor, &mut Tensor, &mut Tensor, &mut u64) {
        let s = &mut self.slots[id.0];
        (&mut s.value, &s.grad, &mut s.m, &mut s.v, &mut s.steps)
    }

    /// Clears Adam moments and step counters.
    pub fn reset_optimizer(&mut self) {
        for s in &mut self.slots {
            s.m.fill(0.0);
            s.v.fill(0.0);
            s.steps = 0;
        }
    }

    /// Sum of squares of the listed parameters.
    pub fn sum_sq(&self, ids: &[ParamId]) -> f64 {
        ids.iter().map(|&id| self.value(id).sum_sq()).sum()
    }

    /// Copies values (not gradients or optimizer state) from `other` for
    /// every parameter name they share, checking shapes.
    pub fn load_values_from(&mut self, other: &ParameterStore) -> Result<usize> {
        let mut n = 0;
        for slot in &mut self.slots {
            if let Some(&id) = other.index.get(&slot.name) {
                let src = &other.slots[id.0].value;
                if src.shape() != slot.value.shape() {
                    return Err(Error::Shape {
                        op: "load_values_from",
                        lhs: slot.value.shape(),
                        rhs: src.shape(),
                    });
                }
                slot.value = src.clone();
                n += 1;
            }
        }
        Ok(n)
    }

    pub fn values_equal(&self, other: &ParameterStore) -> bool {
        self.slots.len() == other.slots.len()
            && self
                .slots
                .iter()
                .zip(&other.slots)
                .all(|(a, b)| a.name == b.name && a.value == b.value)
    }
}
