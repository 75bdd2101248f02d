use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{BodyParams, FaceParams, GestureSequence, HandParams, Stream, BODY_KEYPOINT_DIMS, WINDOW_LEN};
use crate::audio::{compute_deltas, AudioFeatureSequence, FeatureFrame, BASE_DIMS, FRAME_RATE, NUM_CEPSTRA};
use crate::error::{Error, Result};

const SINUSOIDS: usize = 4;
const SOURCES: usize = 3;
const LAGS: usize = 3;
const WARP: f64 = 0.3;
/// Latent motion drivers per stream; every channel mixes these.
pub const SYNTHETIC_DRIVERS: usize = 8;

/// Warped linear combination of a short history of three base features.
#[derive(Clone, Debug)]
struct Driver {
    sources: [usize; SOURCES],
    weights: [[f64; LAGS]; SOURCES],
    phase: f64,
}

#[derive(Clone, Debug)]
struct StreamMap {
    drivers: Vec<Driver>,
    /// Unit-norm mixing row per channel.
    mix: Vec<[f64; SYNTHETIC_DRIVERS]>,
    scale: Vec<f64>,
    offset: Vec<f64>,
}

/// Fixed per-seed map from a short causal history of the base audio
/// features to every gesture channel. Each stream is a linear mix of a few
/// nonlinear drivers, so poses live on a low-dimensional manifold.
#[derive(Clone, Debug)]
pub struct SyntheticMapping {
    feature_offsets: [f64; BASE_DIMS],
    face: StreamMap,
    body: StreamMap,
    hand: StreamMap,
}

fn unit_normal<const N: usize>(rng: &mut ChaCha8Rng) -> [f64; N] {
    let mut v = [0.0; N];
    for x in v.iter_mut() {
        *x = rng.sample(StandardNormal);
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.map(|x| x / norm)
}

fn driver(rng: &mut ChaCha8Rng) -> Driver {
    let mut sources = [0; SOURCES];
    let mut k = 0;
    while k < SOURCES {
        let j = rng.random_range(0..BASE_DIMS);
        if !sources[..k].contains(&j) {
            sources[k] = j;
            k += 1;
        }
    }
    let flat: [f64; SOURCES * LAGS] = unit_normal(rng);
    let mut weights = [[0.0; LAGS]; SOURCES];
    for (i, w) in weights.iter_mut().flatten().enumerate() {
        *w = flat[i];
    }
    Driver { sources, weights, phase: rng.random_range(0.0..2.0 * PI) }
}

fn stream_map(rng: &mut ChaCha8Rng, dims: usize, scale: impl Fn(usize) -> f64) -> StreamMap {
    let drivers = (0..SYNTHETIC_DRIVERS).map(|_| driver(rng)).collect();
    let mix = (0..dims).map(|_| unit_normal(rng)).collect();
    let scale: Vec<f64> = (0..dims).map(scale).collect();
    let offset = scale.iter().map(|s| 0.2 * s * rng.sample::<f64, _>(StandardNormal)).collect();
    StreamMap { drivers, mix, scale, offset }
}

impl SyntheticMapping {
    pub fn new(seed: u64) -> Self {
        Self::from_rng(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn from_rng(rng: &mut ChaCha8Rng) -> Self {
        let mut feature_offsets = [0.0; BASE_DIMS];
        feature_offsets[0] = -10.0;
        feature_offsets[NUM_CEPSTRA] = -4.0;
        let face = stream_map(rng, Stream::Face.dims(), |_| 0.5);
        let body = stream_map(rng, Stream::Body.dims(), |c| if c < BODY_KEYPOINT_DIMS { 0.5 } else { 0.15 });
        let hand = stream_map(rng, Stream::Hand.dims(), |_| 0.5);
        Self { feature_offsets, face, body, hand }
    }

    fn map(&self, s: Stream) -> &StreamMap {
        match s {
            Stream::Face => &self.face,
            Stream::Body => &self.body,
            Stream::Hand => &self.hand,
        }
    }

    /// Input of driver `k` of stream `s`, before warping.
    fn driver_input(&self, features: &AudioFeatureSequence, s: Stream, k: usize) -> Vec<f64> {
        let d = &self.map(s).drivers[k];
        let base: Vec<[f64; 28]> = features.rows();
        (0..base.len())
            .map(|t| {
                let mut z = 0.0;
                for (i, &j) in d.sources.iter().enumerate() {
                    for lag in 0..LAGS {
                        z += d.weights[i][lag] * (base[t.saturating_sub(lag)][j] - self.feature_offsets[j]);
                    }
                }
                z
            })
            .collect()
    }

    /// The linear feature combination behind channel `c` of stream `s`: its
    /// driver mix with the warp removed.
    pub fn drive(&self, features: &AudioFeatureSequence, s: Stream, c: usize) -> Vec<f64> {
        let mix = &self.map(s).mix[c];
        let inputs: Vec<Vec<f64>> = (0..SYNTHETIC_DRIVERS).map(|k| self.driver_input(features, s, k)).collect();
        (0..features.len()).map(|t| (0..SYNTHETIC_DRIVERS).map(|k| mix[k] * inputs[k][t]).sum()).collect()
    }

    /// Frame-major values of stream `s` for `features`.
    fn stream(&self, features: &AudioFeatureSequence, s: Stream) -> Vec<Vec<f64>> {
        let m = self.map(s);
        let latents: Vec<Vec<f64>> = (0..SYNTHETIC_DRIVERS)
            .map(|k| {
                let phase = m.drivers[k].phase;
                self.driver_input(features, s, k).into_iter().map(|z| z + WARP * (2.0 * z + phase).sin()).collect()
            })
            .collect();
        (0..features.len())
            .map(|t| {
                (0..s.dims())
                    .map(|c| {
                        let u: f64 = (0..SYNTHETIC_DRIVERS).map(|k| m.mix[c][k] * latents[k][t]).sum();
                        m.scale[c] * u + m.offset[c]
                    })
                    .collect()
            })
            .collect()
    }

    /// Gesture streams generated from `features`, fully observed.
    pub fn gestures(&self, features: &AudioFeatureSequence) -> Result<GestureSequence> {
        let face = self.stream(features, Stream::Face).iter().map(|r| FaceParams::new(r)).collect::<Result<_>>()?;
        let body = self.stream(features, Stream::Body).iter().map(|r| BodyParams::new(r)).collect::<Result<_>>()?;
        let hand = self.stream(features, Stream::Hand).iter().map(|r| HandParams::new(r)).collect::<Result<_>>()?;
        GestureSequence::complete(face, body, hand)
    }

    /// Smooth random audio feature trajectories of `length` frames.
    pub fn sample_features(&self, rng: &mut impl Rng, length: usize) -> Result<AudioFeatureSequence> {
        let mut base = vec![[0.0; BASE_DIMS]; length];
        for j in 0..BASE_DIMS {
            for _ in 0..SINUSOIDS {
                let freq = rng.random_range(0.1..1.5);
                let amp = rng.random_range(0.3..1.0);
                let phase = rng.random_range(0.0..2.0 * PI);
                for (t, row) in base.iter_mut().enumerate() {
                    row[j] += amp * (2.0 * PI * freq * t as f64 / FRAME_RATE + phase).sin();
                }
            }
            for row in base.iter_mut() {
                row[j] += self.feature_offsets[j];
            }
        }
        let deltas = compute_deltas(&base)?;
        AudioFeatureSequence::new(base.iter().zip(&deltas).map(|(b, d)| FeatureFrame::from_parts(b, d)).collect())
    }
}

/// Deterministic corpus of `n_sequences` aligned feature and gesture
/// sequences sharing one mapping.
pub fn generate_synthetic_corpus(
    seed: u64,
    n_sequences: usize,
    length: usize,
) -> Result<Vec<(AudioFeatureSequence, GestureSequence)>> {
    if n_sequences == 0 {
        return Err(Error::InvalidParameter("corpus needs at least one sequence".into()));
    }
    if length < WINDOW_LEN {
        return Err(Error::InvalidParameter(format!("sequence length {length} below {WINDOW_LEN} frames")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mapping = SyntheticMapping::from_rng(&mut rng);
    (0..n_sequences)
        .map(|_| {
            let features = mapping.sample_features(&mut rng, length)?;
            let gestures = mapping.gestures(&features)?;
            Ok((features, gestures))
        })
        .collect()
}
