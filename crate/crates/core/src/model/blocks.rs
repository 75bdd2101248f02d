use gesture_autograd::{BnId, Graph, Mode, ParamId, ParamStore, Tensor, Var};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;

pub(crate) fn normal_tensor(rng: &mut impl Rng, shape: &[usize], std: f64) -> Tensor {
    let dist = Normal::new(0.0, std).expect("positive std");
    Tensor::from_fn(shape, |_| dist.sample(rng))
}

/// Width-3 convolution with bias.
#[derive(Clone, Debug)]
pub(crate) struct Conv {
    pub w: ParamId,
    pub b: ParamId,
}

impl Conv {
    pub fn new(store: &mut ParamStore, name: &str, cin: usize, cout: usize, gain: f64, rng: &mut impl Rng) -> Self {
        let std = (gain / (3 * cin) as f64).sqrt();
        let w = store.add_param(format!("{name}.w"), normal_tensor(rng, &[cout, cin, 3], std));
        let b = store.add_param(format!("{name}.b"), Tensor::zeros(&[cout]));
        Self { w, b }
    }

    pub fn forward(&self, store: &ParamStore, g: &mut Graph, x: Var) -> Result<Var> {
        let (w, b) = (store.bind(g, self.w), store.bind(g, self.b));
        Ok(g.conv1d(x, w, b)?)
    }
}

/// Conv, batch norm, ReLU.
#[derive(Clone, Debug)]
pub(crate) struct ConvBlock {
    pub conv: Conv,
    gamma: ParamId,
    beta: ParamId,
    bn: BnId,
}

impl ConvBlock {
    pub fn new(store: &mut ParamStore, name: &str, cin: usize, cout: usize, rng: &mut impl Rng) -> Self {
        let conv = Conv::new(store, &format!("{name}.conv"), cin, cout, 1.0 / 3.0, rng);
        let gamma = store.add_param(format!("{name}.bn.gamma"), Tensor::full(&[cout], 1.0));
        let beta = store.add_param(format!("{name}.bn.beta"), Tensor::zeros(&[cout]));
        let bn = store.add_batchnorm(format!("{name}.bn"), cout);
        Self { conv, gamma, beta, bn }
    }

    pub fn forward(&self, store: &mut ParamStore, g: &mut Graph, x: Var, mode: Mode) -> Result<Var> {
        let y = self.conv.forward(store, g, x)?;
        let (gamma, beta) = (store.bind(g, self.gamma), store.bind(g, self.beta));
        let y = g.batchnorm1d(y, gamma, beta, store.batchnorm_mut(self.bn), mode)?;
        Ok(g.relu(y)?)
    }
}
