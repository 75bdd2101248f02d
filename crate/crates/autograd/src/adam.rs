use crate::error::{AutogradError, Result};
use crate::param::{ParamStore, Parameter};

/// Adam with bias correction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    /// Applies one update to every parameter and clears the gradients.
    ///
    /// All gradients are checked before any parameter is touched.
    pub fn step(&self, params: &mut [Parameter]) -> Result<()> {
        if let Some(p) = params.iter().find(|p| p.grad.is_none()) {
            return Err(AutogradError::State(format!("adam step: parameter {} has no gradient", p.name)));
        }
        for p in params.iter_mut() {
            let grad = p.grad.take().expect("checked above");
            p.step_count += 1;
            let t = p.step_count as i32;
            let c1 = 1.0 - self.beta1.powi(t);
            let c2 = 1.0 - self.beta2.powi(t);
            let values = p.value.data_mut();
            for i in 0..values.len() {
                let g = grad[i];
                p.adam_m[i] = self.beta1 * p.adam_m[i] + (1.0 - self.beta1) * g;
                p.adam_v[i] = self.beta2 * p.adam_v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = p.adam_m[i] / c1;
                let v_hat = p.adam_v[i] / c2;
                values[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }

    pub fn step_store(&self, store: &mut ParamStore) -> Result<()> {
        self.step(store.params_mut())
    }
}
