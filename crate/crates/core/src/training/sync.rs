use gesture_autograd::{Adam, Graph, Mode};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Batch;
use crate::annotation::{GestureSequence, TrainingWindow};
use crate::audio::AudioFeatureSequence;
use crate::error::{Error, Result};
use crate::evaluation::SyncAccuracy;
use crate::model::{Discriminator, DiscriminatorConfig};

pub const SYNC_WINDOW_LENGTHS: [usize; 3] = [16, 32, 64];
const EVAL_CHUNK: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyncConfig {
    pub base_channels: usize,
    pub lr: f64,
    /// Pairs per step, half in-sync and half off-sync.
    pub batch_size: usize,
    pub iterations: u64,
    /// Fraction of sequences held out for testing.
    pub holdout_fraction: f64,
    /// Set by the caller; not part of the serialized configuration.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for SyncConfig {
    fn default() -> Self {
        Self { base_channels: 16, lr: 5e-4, batch_size: 24, iterations: 600, holdout_fraction: 0.1, seed: 0 }
    }
}

impl SyncConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 || !self.batch_size.is_multiple_of(2) {
            return Err(Error::Config(format!("sync batch_size must be even and >= 2, got {}", self.batch_size)));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::Config(format!("holdout_fraction must be in (0, 1), got {}", self.holdout_fraction)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SyncOutcome {
    pub classifier: Discriminator,
    pub window_length: usize,
    pub accuracy: SyncAccuracy,
    pub train_sequences: Vec<usize>,
    pub test_sequences: Vec<usize>,
}

struct Pairs<'a> {
    corpus: &'a [(AudioFeatureSequence, GestureSequence)],
    len: usize,
}

impl Pairs<'_> {
    fn window(&self, seq: usize, start: usize) -> Option<TrainingWindow> {
        let (f, g) = &self.corpus[seq];
        TrainingWindow::extract(f, g, start, self.len, "").ok()
    }

    fn random_start(&self, seq: usize, rng: &mut impl Rng) -> usize {
        rng.random_range(0..=self.corpus[seq].1.len() - self.len)
    }

    /// Audio of `seq` at `start` with body and hand of a random window of
    /// another sequence from `pool`.
    fn off_sync(&self, seq: usize, start: usize, pool: &[usize], rng: &mut impl Rng) -> Option<TrainingWindow> {
        let donors: Vec<usize> = pool.iter().copied().filter(|&d| d != seq).collect();
        let donors = if donors.is_empty() { (0..self.corpus.len()).filter(|&d| d != seq).collect() } else { donors };
        let donor = donors[rng.random_range(0..donors.len())];
        let mut w = self.window(seq, start)?;
        let d = self.window(donor, self.random_start(donor, rng))?;
        w.body = d.body;
        w.hand = d.hand;
        Some(w)
    }
}

fn score(d: &mut Discriminator, windows: &[TrainingWindow]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(windows.len());
    for chunk in windows.chunks(EVAL_CHUNK) {
        let refs: Vec<&TrainingWindow> = chunk.iter().collect();
        let b = Batch::from_windows(&refs)?;
        let mut g = Graph::new();
        let (f, body, hand) = (g.constant(b.features), g.constant(b.body), g.constant(b.hand));
        let p = d.forward(&mut g, f, body, hand, Mode::Eval)?;
        out.extend_from_slice(g.value(p).data());
    }
    Ok(out)
}

/// Trains the discriminator architecture to tell audio paired with its own
/// body and hand motion from audio paired with another sequence's motion,
/// and reports accuracy on held-out sequences.
pub fn train_sync_classifier(
    corpus: &[(AudioFeatureSequence, GestureSequence)],
    window_length: usize,
    config: &SyncConfig,
) -> Result<SyncOutcome> {
    config.validate()?;
    let d_config = DiscriminatorConfig { base_channels: config.base_channels, window_length };
    d_config.validate()?;
    if corpus.len() < 2 {
        return Err(Error::Contract("sync classifier needs at least two sequences".into()));
    }
    if let Some(i) = corpus.iter().position(|(f, g)| f.len() != g.len() || g.len() < window_length) {
        return Err(Error::Contract(format!("sequence {i} is misaligned or shorter than {window_length} frames")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut rng);
    let n_test = ((corpus.len() as f64 * config.holdout_fraction).round() as usize).clamp(1, corpus.len() - 1);
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();

    let pairs = Pairs { corpus, len: window_length };
    let mut d = Discriminator::new(d_config, &mut rng)?;
    let adam = Adam::new(config.lr);
    let half = config.batch_size / 2;
    for _ in 0..config.iterations {
        let mut windows = Vec::with_capacity(config.batch_size);
        let mut labels = Vec::with_capacity(config.batch_size);
        let mut attempts = 0;
        while windows.len() < config.batch_size {
            attempts += 1;
            if attempts > 100 * config.batch_size {
                return Err(Error::Contract("could not draw complete sync windows".into()));
            }
            let seq = train[rng.random_range(0..train.len())];
            let start = pairs.random_start(seq, &mut rng);
            let in_sync = labels.len() < half;
            let w = if in_sync { pairs.window(seq, start) } else { pairs.off_sync(seq, start, &train, &mut rng) };
            if let Some(w) = w {
                windows.push(w);
                labels.push(if in_sync { 1.0 } else { 0.0 });
            }
        }
        let refs: Vec<&TrainingWindow> = windows.iter().collect();
        let b = Batch::from_windows(&refs)?;
        let mut g = Graph::new();
        let (f, body, hand) = (g.constant(b.features), g.constant(b.body), g.constant(b.hand));
        let p = d.forward(&mut g, f, body, hand, Mode::Train)?;
        let loss = g.bce_loss(p, &labels)?;
        let grads = g.backward(loss)?;
        d.store.zero_grad();
        d.store.accumulate(&grads);
        adam.step_store(&mut d.store)?;
    }

    let stride = (window_length / 4).max(1);
    let (mut real, mut fake) = (Vec::new(), Vec::new());
    for &seq in &test {
        let n = corpus[seq].1.len();
        for start in (0..=n - window_length).step_by(stride) {
            if let Some(w) = pairs.window(seq, start) {
                real.push(w);
                if let Some(o) = pairs.off_sync(seq, start, &test, &mut rng) {
                    fake.push(o);
                }
            }
        }
    }
    let accuracy = SyncAccuracy::from_scores(&score(&mut d, &real)?, &score(&mut d, &fake)?)?;
    Ok(SyncOutcome { classifier: d, window_length, accuracy, train_sequences: train, test_sequences: test })
}
