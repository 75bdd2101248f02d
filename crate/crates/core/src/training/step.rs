use std::path::Path;
use std::time::Instant;

use gesture_autograd::{Adam, Graph, Mode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{adversarial_losses, regression_loss, Batch, LossWeights, StepMetrics};
use crate::annotation::{Stream, TrainingWindow};
use crate::error::{Error, Result};
use crate::model::{save_checkpoint, Generator, ModelBundle};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_iterations: u64,
    pub g_steps_per_d_step: usize,
    pub adversarial: bool,
    /// Use `-BCE(D(fake), 0)` for the generator instead of `BCE(D(fake), 1)`.
    pub saturating: bool,
    /// Back-propagate the adversarial term alone each step and fail if any
    /// face-head parameter receives a nonzero gradient.
    pub verify_isolation: bool,
    /// Save a checkpoint every this many iterations; 0 saves only at the end.
    pub checkpoint_every: u64,
    /// Set by the caller; not part of the serialized configuration.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 5e-4,
            batch_size: 25,
            max_iterations: 2000,
            g_steps_per_d_step: 1,
            adversarial: true,
            saturating: false,
            verify_isolation: false,
            checkpoint_every: 0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.g_steps_per_d_step == 0 {
            return Err(Error::Config("g_steps_per_d_step must be at least 1".into()));
        }
        if self.adversarial && self.batch_size < 2 {
            return Err(Error::Config("adversarial training needs batch_size >= 2".into()));
        }
        Ok(())
    }
}

/// One iteration: a discriminator update on real and detached fake pairs,
/// then `g_steps_per_d_step` generator updates.
pub fn train_step(
    model: &mut ModelBundle,
    batch: &Batch,
    weights: &LossWeights,
    config: &TrainConfig,
) -> Result<StepMetrics> {
    let started = Instant::now();
    if batch.is_empty() {
        return Err(Error::Contract("empty batch".into()));
    }
    if config.adversarial && batch.len() < 2 {
        return Err(Error::Contract(format!("adversarial step needs at least 2 windows, got {}", batch.len())));
    }
    let adam = Adam::new(config.lr);

    let mut g = Graph::new();
    let features = g.constant(batch.features.clone());
    let pred = model.generator.forward(&mut g, features, Mode::Train)?;

    let mut d_loss_value = None;
    if config.adversarial {
        let before = model.generator.store.fingerprint();
        let fake_body = g.value(pred.body).clone();
        let fake_hand = g.value(pred.hand).clone();
        let mut gd = Graph::new();
        let f = gd.constant(batch.features.clone());
        let (rb, rh) = (gd.constant(batch.body.clone()), gd.constant(batch.hand.clone()));
        let (fb, fh) = (gd.constant(fake_body), gd.constant(fake_hand));
        let d_real = model.discriminator.forward(&mut gd, f, rb, rh, Mode::Train)?;
        let d_fake = model.discriminator.forward(&mut gd, f, fb, fh, Mode::Train)?;
        let losses = adversarial_losses(&mut gd, d_real, d_fake, config.saturating)?;
        let grads = gd.backward(losses.d_loss)?;
        model.discriminator.store.zero_grad();
        model.discriminator.store.accumulate(&grads);
        adam.step_store(&mut model.discriminator.store)?;
        d_loss_value = Some(gd.item(losses.d_loss)?);
        if model.generator.store.fingerprint() != before {
            return Err(Error::Contract("discriminator update changed generator parameters".into()));
        }
    }

    let mut metrics = None;
    for k in 0..config.g_steps_per_d_step {
        if k > 0 {
            g = Graph::new();
        }
        let features = g.constant(batch.features.clone());
        let pred = if k == 0 { pred } else { model.generator.forward(&mut g, features, Mode::Train)? };
        let targets = batch.target_vars(&mut g);
        let reg = regression_loss(&mut g, &pred, targets, weights)?;

        let mut total = reg.total;
        let mut g_loss_value = None;
        if config.adversarial {
            let d_before = model.discriminator.store.fingerprint();
            let d_fake = model.discriminator.forward(&mut g, features, pred.body, pred.hand, Mode::Train)?;
            let n = g.value(d_fake).len();
            let g_loss = if config.saturating {
                let l = g.bce_loss(d_fake, &vec![0.0; n])?;
                g.scale(l, -1.0)?
            } else {
                g.bce_loss(d_fake, &vec![1.0; n])?
            };
            let adv = g.scale(g_loss, weights.adversarial)?;
            if config.verify_isolation {
                check_face_isolation(&model.generator, &g.backward(adv)?)?;
            }
            total = g.add(reg.total, adv)?;
            g_loss_value = Some(g.item(g_loss)?);
            let grads = g.backward(total)?;
            model.generator.store.zero_grad();
            model.generator.store.accumulate(&grads);
            if model.discriminator.store.fingerprint() != d_before {
                return Err(Error::Contract("generator step changed discriminator parameters".into()));
            }
        } else {
            let grads = g.backward(total)?;
            model.generator.store.zero_grad();
            model.generator.store.accumulate(&grads);
        }
        adam.step_store(&mut model.generator.store)?;

        if k == 0 {
            metrics = Some(StepMetrics {
                iteration: model.iteration + 1,
                l_face: g.item(reg.face)?,
                l_body: g.item(reg.body)?,
                l_hand: g.item(reg.hand)?,
                l_reg: g.item(reg.total)?,
                d_loss: d_loss_value,
                g_loss: g_loss_value,
                wall_ms: 0,
            });
        }
    }
    model.iteration += 1;
    let mut m = metrics.expect("at least one generator step");
    m.wall_ms = started.elapsed().as_millis() as u64;
    Ok(m)
}

/// Fails if any face-head parameter got a nonzero gradient.
fn check_face_isolation(gen: &Generator, grads: &gesture_autograd::Gradients) -> Result<()> {
    let prefix = Generator::head_prefix(Stream::Face);
    for (key, grad) in grads.param_grads() {
        if key.store != gen.store.id() {
            continue;
        }
        let name = &gen.store.params()[key.index].name;
        if name.starts_with(&prefix) && grad.iter().any(|&v| v != 0.0) {
            return Err(Error::Contract(format!("adversarial gradient reached face parameter {name}")));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingLog {
    pub metrics: Vec<StepMetrics>,
}

impl TrainingLog {
    pub fn first(&self) -> Option<&StepMetrics> {
        self.metrics.first()
    }

    pub fn last(&self) -> Option<&StepMetrics> {
        self.metrics.last()
    }
}

/// Runs `config.max_iterations` steps on mini-batches drawn uniformly with
/// replacement from `windows`. When `checkpoint` is given the model is saved
/// there periodically and after the last step.
pub fn train(
    model: &mut ModelBundle,
    windows: &[TrainingWindow],
    weights: &LossWeights,
    config: &TrainConfig,
    checkpoint: Option<&Path>,
) -> Result<TrainingLog> {
    config.validate()?;
    weights.validate()?;
    if windows.is_empty() {
        return Err(Error::Contract("training corpus yields no windows".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut log = TrainingLog::default();
    for it in 0..config.max_iterations {
        let picked: Vec<&TrainingWindow> =
            (0..config.batch_size).map(|_| &windows[rng.random_range(0..windows.len())]).collect();
        let batch = Batch::from_windows(&picked)?;
        let m = train_step(model, &batch, weights, config)?;
        if !m.is_finite() {
            return Err(Error::Contract(format!("non-finite loss at iteration {}", m.iteration)));
        }
        log.metrics.push(m);
        if let Some(path) = checkpoint {
            let last = it + 1 == config.max_iterations;
            if last || (config.checkpoint_every > 0 && (it + 1) % config.checkpoint_every == 0) {
                save_checkpoint(model, path)?;
            }
        }
    }
    Ok(log)
}
