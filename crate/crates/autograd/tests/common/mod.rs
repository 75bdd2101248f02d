#![allow(dead_code)]

use gesture_autograd::gradcheck::check_graph;
use gesture_autograd::{Graph, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-4;
pub const INSTANCES: u64 = 20;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    Tensor::from_fn(shape, |_| rng.random_range(lo..hi))
}

pub fn check_op<F>(build: F, inputs: &[Tensor], rng: &mut ChaCha8Rng) -> f64
where
    F: Fn(&mut Graph, &[Var]) -> Var,
{
    check_graph(build, inputs, rng).worst
}
