use gesture_autograd::{AutogradError, Graph, Mode, ParamStore, Tensor, Var};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::blocks::{Conv, ConvBlock};
use crate::annotation::{to_frame_major, Stream};
use crate::audio::{AudioFeatureSequence, FEATURE_DIMS};
use crate::error::{Error, Result};

pub const ENCODER_BLOCKS: usize = 8;
pub const DECODER_BLOCKS: usize = 7;
/// Input lengths are padded to a multiple of this (three 2x pools).
pub const TEMPORAL_FACTOR: usize = 8;
/// Output convolutions start small so early predictions sit near zero.
const OUTPUT_GAIN: f64 = 1.0 / 300.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub base_channels: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self { base_channels: 64 }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.base_channels == 0 {
            return Err(Error::Config("generator base_channels must be positive".into()));
        }
        Ok(())
    }

    pub fn encoder_widths(&self) -> [usize; ENCODER_BLOCKS] {
        let b = self.base_channels;
        [b, b, 2 * b, 2 * b, 4 * b, 4 * b, 8 * b, 8 * b]
    }

    /// 1-based encoder blocks followed by a pool.
    pub fn pool_after(&self) -> [usize; 3] {
        [2, 4, 6]
    }

    /// 1-based decoder blocks preceded by an upsample, counted from the bottleneck.
    pub fn upsample_before(&self) -> [usize; 3] {
        [2, 4, 6]
    }

    /// `(input, output)` channels of each decoder block.
    pub fn decoder_widths(&self) -> [(usize, usize); DECODER_BLOCKS] {
        let b = self.base_channels;
        [
            (8 * b, 8 * b),
            (8 * b + 4 * b, 4 * b),
            (4 * b, 4 * b),
            (4 * b + 2 * b, 2 * b),
            (2 * b, 2 * b),
            (2 * b + b, b),
            (b, b),
        ]
    }
}

#[derive(Clone, Debug)]
struct Decoder {
    stream: Stream,
    blocks: Vec<ConvBlock>,
    out: Conv,
}

/// Predicted streams, each `[N, C, T]`.
#[derive(Clone, Copy, Debug)]
pub struct GeneratorOutput {
    pub face: Var,
    pub body: Var,
    pub hand: Var,
}

impl GeneratorOutput {
    pub fn get(&self, s: Stream) -> Var {
        match s {
            Stream::Face => self.face,
            Stream::Body => self.body,
            Stream::Hand => self.hand,
        }
    }
}

/// Shared 1D convolutional encoder with one skip-connected decoder per stream.
#[derive(Clone, Debug)]
pub struct Generator {
    config: GeneratorConfig,
    pub store: ParamStore,
    encoder: Vec<ConvBlock>,
    decoders: Vec<Decoder>,
}

impl Generator {
    pub fn new(config: GeneratorConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let mut cin = FEATURE_DIMS;
        let mut encoder = Vec::with_capacity(ENCODER_BLOCKS);
        for (i, &w) in config.encoder_widths().iter().enumerate() {
            encoder.push(ConvBlock::new(&mut store, &format!("gen.enc{}", i + 1), cin, w, rng));
            cin = w;
        }
        let decoders = Stream::ALL
            .iter()
            .map(|&stream| {
                let prefix = format!("gen.{}", stream.name());
                let blocks = config
                    .decoder_widths()
                    .iter()
                    .enumerate()
                    .map(|(i, &(ci, co))| ConvBlock::new(&mut store, &format!("{prefix}.dec{}", i + 1), ci, co, rng))
                    .collect();
                let out = Conv::new(
                    &mut store,
                    &format!("{prefix}.out"),
                    config.base_channels,
                    stream.dims(),
                    OUTPUT_GAIN,
                    rng,
                );
                Decoder { stream, blocks, out }
            })
            .collect();
        Ok(Self { config, store, encoder, decoders })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    /// Name prefix of the parameters owned by one decoder head.
    pub fn head_prefix(stream: Stream) -> String {
        format!("gen.{}.", stream.name())
    }

    /// Runs the network on `features` (`[N, 28, T]`, `T >= 8`).
    ///
    /// Lengths that are not a multiple of 8 are mirrored at the end and the
    /// outputs cropped back to `T`.
    pub fn forward(&mut self, g: &mut Graph, features: Var, mode: Mode) -> Result<GeneratorOutput> {
        let shape = g.shape(features).to_vec();
        let [_, c, t] = shape[..] else {
            return Err(AutogradError::Shape(format!("generator input must be [N, 28, T], got {shape:?}")).into());
        };
        if c != FEATURE_DIMS {
            return Err(
                AutogradError::Shape(format!("generator expects {FEATURE_DIMS} feature channels, got {c}")).into()
            );
        }
        if t < TEMPORAL_FACTOR {
            return Err(
                AutogradError::Shape(format!("generator needs at least {TEMPORAL_FACTOR} frames, got {t}")).into()
            );
        }
        let pad = (TEMPORAL_FACTOR - t % TEMPORAL_FACTOR) % TEMPORAL_FACTOR;
        let mut x = if pad > 0 { g.pad_reflect_end(features, pad)? } else { features };

        let pools = self.config.pool_after();
        let mut skips = Vec::with_capacity(3);
        for (i, block) in self.encoder.iter().enumerate() {
            x = block.forward(&mut self.store, g, x, mode)?;
            if pools.contains(&(i + 1)) {
                skips.push(x);
                x = g.maxpool1d(x)?;
            }
        }
        let bottleneck = x;

        let ups = self.config.upsample_before();
        let mut outs = Vec::with_capacity(3);
        for dec in &self.decoders {
            let mut y = bottleneck;
            let mut pending = skips.clone();
            for (i, block) in dec.blocks.iter().enumerate() {
                if ups.contains(&(i + 1)) {
                    y = g.upsample_nearest(y)?;
                    let skip = pending.pop().expect("one skip per upsample");
                    assert_eq!(g.shape(y)[2], g.shape(skip)[2], "skip length mismatch in {:?} decoder", dec.stream);
                    y = g.concat_channels(y, skip)?;
                }
                y = block.forward(&mut self.store, g, y, mode)?;
            }
            y = dec.out.forward(&self.store, g, y)?;
            if pad > 0 {
                y = g.crop_time(y, t)?;
            }
            outs.push(y);
        }
        Ok(GeneratorOutput { face: outs[0], body: outs[1], hand: outs[2] })
    }

    /// Eval-mode prediction for one feature sequence, as frame-major
    /// `[face, body, hand]` rows.
    pub fn predict(&mut self, features: &AudioFeatureSequence) -> Result<[Vec<f64>; 3]> {
        let t = features.len();
        let rows: Vec<f64> = features.rows().iter().flatten().copied().collect();
        let channels = crate::annotation::to_channel_major(&rows, t, FEATURE_DIMS);
        let mut g = Graph::new();
        let x = g.constant(Tensor::new(vec![1, FEATURE_DIMS, t], channels)?);
        let out = self.forward(&mut g, x, Mode::Eval)?;
        let take = |s: Stream| to_frame_major(g.value(out.get(s)).data(), t, s.dims());
        Ok([take(Stream::Face), take(Stream::Body), take(Stream::Hand)])
    }
}
