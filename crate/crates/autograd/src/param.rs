use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{AutogradError, Result};
use crate::graph::{Gradients, Graph, Var};
use crate::tensor::Tensor;

static NEXT_STORE_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_store_id() -> u64 {
    NEXT_STORE_ID.fetch_add(1, Ordering::Relaxed)
}

/// Trainable tensor plus its Adam moments.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Option<Vec<f64>>,
    pub adam_m: Vec<f64>,
    pub adam_v: Vec<f64>,
    pub step_count: u64,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let n = value.len();
        Self { name: name.into(), value, grad: None, adam_m: vec![0.0; n], adam_v: vec![0.0; n], step_count: 0 }
    }
}

/// Running statistics of one batch-norm layer.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormState {
    pub name: String,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    /// Number of train-mode batches folded into the running statistics.
    pub batches_tracked: u64,
}

impl BatchNormState {
    pub fn new(name: impl Into<String>, channels: usize) -> Self {
        Self {
            name: name.into(),
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            batches_tracked: 0,
        }
    }

    pub fn channels(&self) -> usize {
        self.running_mean.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BnId(pub usize);

/// Identifies a parameter across stores bound into one graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamKey {
    pub store: u64,
    pub index: usize,
}

/// Owns the parameters and batch-norm buffers of one network.
///
/// Each store carries a process-unique id so that gradients from a graph
/// mixing several networks are routed only to the store that owns them.
/// Cloning yields a store with a fresh id.
#[derive(Debug)]
pub struct ParamStore {
    id: u64,
    params: Vec<Parameter>,
    bn: Vec<BatchNormState>,
}

impl Clone for ParamStore {
    fn clone(&self) -> Self {
        Self { id: fresh_store_id(), params: self.params.clone(), bn: self.bn.clone() }
    }
}

impl PartialEq for ParamStore {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.bn == other.bn
    }
}

impl Default for ParamStore {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self { id: fresh_store_id(), params: Vec::new(), bn: Vec::new() }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn add_param(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.params.push(Parameter::new(name, value));
        ParamId(self.params.len() - 1)
    }

    pub fn add_batchnorm(&mut self, name: impl Into<String>, channels: usize) -> BnId {
        self.bn.push(BatchNormState::new(name, channels));
        BnId(self.bn.len() - 1)
    }

    pub fn param(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn param_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn params(&self) -> &[Parameter] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Parameter] {
        &mut self.params
    }

    pub fn batchnorm(&self, id: BnId) -> &BatchNormState {
        &self.bn[id.0]
    }

    pub fn batchnorm_mut(&mut self, id: BnId) -> &mut BatchNormState {
        &mut self.bn[id.0]
    }

    pub fn batchnorms(&self) -> &[BatchNormState] {
        &self.bn
    }

    pub fn batchnorms_mut(&mut self) -> &mut [BatchNormState] {
        &mut self.bn
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Copies the current value of a parameter into `graph` as a differentiable leaf.
    pub fn bind(&self, graph: &mut Graph, id: ParamId) -> Var {
        graph.param_leaf(ParamKey { store: self.id, index: id.0 }, self.params[id.0].value.clone())
    }

    /// Adds the gradients of every parameter of this store reachable in `grads`.
    ///
    /// Repeated calls accumulate. Returns how many parameters received a gradient.
    pub fn accumulate(&mut self, grads: &Gradients) -> usize {
        let mut touched = 0;
        for (key, grad) in grads.param_grads() {
            if key.store != self.id {
                continue;
            }
            let p = &mut self.params[key.index];
            match &mut p.grad {
                Some(acc) => acc.iter_mut().zip(grad).for_each(|(a, g)| *a += g),
                None => p.grad = Some(grad.to_vec()),
            }
            touched += 1;
        }
        touched
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad = None;
        }
    }

    /// Hash of every parameter value, bit-exact.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for p in &self.params {
            p.name.hash(&mut h);
            for v in p.value.data() {
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }

    /// Fails if any parameter is missing a gradient.
    pub fn require_grads(&self) -> Result<()> {
        match self.params.iter().find(|p| p.grad.is_none()) {
            Some(p) => Err(AutogradError::State(format!("parameter {} has no gradient", p.name))),
            None => Ok(()),
        }
    }
}
