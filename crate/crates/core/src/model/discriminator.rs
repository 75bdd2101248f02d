use gesture_autograd::{AutogradError, Graph, Mode, ParamId, ParamStore, Tensor, Var};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::blocks::{normal_tensor, ConvBlock};
use crate::annotation::{BODY_DIMS, FACE_DIMS, HAND_DIMS};
use crate::audio::FEATURE_DIMS;
use crate::error::{Error, Result};

pub const DISCRIMINATOR_BLOCKS: usize = 6;
pub const DISCRIMINATOR_INPUT_CHANNELS: usize = FEATURE_DIMS + BODY_DIMS + HAND_DIMS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscriminatorConfig {
    pub base_channels: usize,
    pub window_length: usize,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        Self { base_channels: 64, window_length: 64 }
    }
}

impl DiscriminatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.base_channels == 0 {
            return Err(Error::Config("discriminator base_channels must be positive".into()));
        }
        if ![16, 32, 64].contains(&self.window_length) {
            return Err(Error::Config(format!("window length must be 16, 32 or 64, got {}", self.window_length)));
        }
        Ok(())
    }

    pub fn widths(&self) -> [usize; DISCRIMINATOR_BLOCKS] {
        let b = self.base_channels;
        [b, b, 2 * b, 2 * b, 4 * b, 4 * b]
    }

    /// 1-based blocks followed by a pool; 16-frame windows skip the last one.
    pub fn pool_after(&self) -> Vec<usize> {
        if self.window_length == 16 {
            vec![2, 4]
        } else {
            vec![2, 4, 6]
        }
    }

    pub fn final_length(&self) -> usize {
        self.window_length >> self.pool_after().len()
    }
}

/// Scores whether audio features and body/hand poses belong together.
#[derive(Clone, Debug)]
pub struct Discriminator {
    config: DiscriminatorConfig,
    pub store: ParamStore,
    blocks: Vec<ConvBlock>,
    fc_w: ParamId,
    fc_b: ParamId,
}

impl Discriminator {
    pub fn new(config: DiscriminatorConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let mut cin = DISCRIMINATOR_INPUT_CHANNELS;
        let mut blocks = Vec::with_capacity(DISCRIMINATOR_BLOCKS);
        for (i, &w) in config.widths().iter().enumerate() {
            blocks.push(ConvBlock::new(&mut store, &format!("disc.block{}", i + 1), cin, w, rng));
            cin = w;
        }
        let flat = cin * config.final_length();
        let fc_w = store.add_param("disc.fc.w", normal_tensor(rng, &[1, flat], (1.0 / flat as f64).sqrt()));
        let fc_b = store.add_param("disc.fc.b", Tensor::zeros(&[1]));
        Ok(Self { config, store, blocks, fc_w, fc_b })
    }

    pub fn config(&self) -> &DiscriminatorConfig {
        &self.config
    }

    /// Probabilities `[N]` that each (features, body, hand) window is real.
    pub fn forward(&mut self, g: &mut Graph, features: Var, body: Var, hand: Var, mode: Mode) -> Result<Var> {
        let l = self.config.window_length;
        let body_shape = g.shape(body).to_vec();
        if body_shape.len() == 3 && body_shape[1] == FACE_DIMS {
            return Err(Error::Contract("the discriminator never sees face parameters".into()));
        }
        let n = g.shape(features).first().copied().unwrap_or(0);
        for (v, c, what) in [(features, FEATURE_DIMS, "features"), (body, BODY_DIMS, "body"), (hand, HAND_DIMS, "hand")]
        {
            if g.shape(v) != [n, c, l] {
                return Err(AutogradError::Shape(format!(
                    "discriminator {what} must be [{n}, {c}, {l}], got {:?}",
                    g.shape(v)
                ))
                .into());
            }
        }
        let x = g.concat_channels(features, body)?;
        let mut x = g.concat_channels(x, hand)?;
        let pools = self.config.pool_after();
        for (i, block) in self.blocks.iter().enumerate() {
            x = block.forward(&mut self.store, g, x, mode)?;
            if pools.contains(&(i + 1)) {
                x = g.maxpool1d(x)?;
            }
        }
        let flat = g.shape(x)[1] * g.shape(x)[2];
        let x = g.reshape(x, vec![n, flat])?;
        let (w, b) = (self.store.bind(g, self.fc_w), self.store.bind(g, self.fc_b));
        let logit = g.linear(x, w, b)?;
        let p = g.sigmoid(logit)?;
        Ok(g.reshape(p, vec![n])?)
    }
}
