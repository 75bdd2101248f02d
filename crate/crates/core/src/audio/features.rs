use std::path::Path;

use super::{AudioSignal, MfccConfig, MfccExtractor, BASE_DIMS, FEATURE_DIMS, FRAME_RATE, NUM_CEPSTRA};
use crate::error::{Error, Result};
use crate::formats::GftFile;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureFrame {
    pub mfcc: [f64; NUM_CEPSTRA],
    pub log_energy: f64,
    pub d_mfcc: [f64; NUM_CEPSTRA],
    pub d_log_energy: f64,
}

impl FeatureFrame {
    pub fn from_parts(base: &[f64; BASE_DIMS], delta: &[f64; BASE_DIMS]) -> Self {
        let mut mfcc = [0.0; NUM_CEPSTRA];
        let mut d_mfcc = [0.0; NUM_CEPSTRA];
        mfcc.copy_from_slice(&base[..NUM_CEPSTRA]);
        d_mfcc.copy_from_slice(&delta[..NUM_CEPSTRA]);
        Self { mfcc, log_energy: base[NUM_CEPSTRA], d_mfcc, d_log_energy: delta[NUM_CEPSTRA] }
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != FEATURE_DIMS {
            return Err(Error::InvalidInput(format!("feature frame has {} values, expected {FEATURE_DIMS}", v.len())));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("feature frame has non-finite values".into()));
        }
        let mut base = [0.0; BASE_DIMS];
        let mut delta = [0.0; BASE_DIMS];
        base.copy_from_slice(&v[..BASE_DIMS]);
        delta.copy_from_slice(&v[BASE_DIMS..]);
        Ok(Self::from_parts(&base, &delta))
    }

    /// `[mfcc, log_energy, d_mfcc, d_log_energy]`.
    pub fn to_array(&self) -> [f64; FEATURE_DIMS] {
        let mut out = [0.0; FEATURE_DIMS];
        out[..NUM_CEPSTRA].copy_from_slice(&self.mfcc);
        out[NUM_CEPSTRA] = self.log_energy;
        out[BASE_DIMS..BASE_DIMS + NUM_CEPSTRA].copy_from_slice(&self.d_mfcc);
        out[FEATURE_DIMS - 1] = self.d_log_energy;
        out
    }
}

/// Speech features at 15 Hz.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioFeatureSequence {
    frames: Vec<FeatureFrame>,
}

impl AudioFeatureSequence {
    pub fn new(frames: Vec<FeatureFrame>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::InvalidInput("feature sequence has no frames".into()));
        }
        Ok(Self { frames })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let frames = rows.iter().map(|r| FeatureFrame::from_slice(r.as_ref())).collect::<Result<Vec<_>>>()?;
        Self::new(frames)
    }

    pub fn frames(&self) -> &[FeatureFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_rate(&self) -> f64 {
        FRAME_RATE
    }

    pub fn rows(&self) -> Vec<[f64; FEATURE_DIMS]> {
        self.frames.iter().map(FeatureFrame::to_array).collect()
    }

    /// Frames `start..start + len` as a new sequence.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        let end = start
            .checked_add(len)
            .filter(|&e| e <= self.frames.len())
            .ok_or_else(|| Error::Alignment(format!("slice {start}+{len} exceeds {} frames", self.frames.len())))?;
        Self::new(self.frames[start..end].to_vec())
    }

    pub fn to_gft(&self) -> GftFile {
        GftFile::from_rows(FEATURE_DIMS, FRAME_RATE as f32, &self.rows()).expect("rows are 28 wide")
    }

    pub fn from_gft(file: &GftFile, origin: &Path) -> Result<Self> {
        if file.dims != FEATURE_DIMS {
            return Err(Error::format(origin, format!("expected {FEATURE_DIMS} dims, file has {}", file.dims)));
        }
        if file.frame_rate != FRAME_RATE as f32 {
            return Err(Error::format(origin, format!("expected 15 Hz, file says {}", file.frame_rate)));
        }
        Self::from_rows(&file.rows_f64()).map_err(|e| Error::format(origin, e.to_string()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_gft(&GftFile::read(path)?, path)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_gft().write(path)
    }
}

fn backward_difference(seq: &[[f64; BASE_DIMS]]) -> Vec<[f64; BASE_DIMS]> {
    let mut out = vec![[0.0; BASE_DIMS]; seq.len()];
    for t in 1..seq.len() {
        for d in 0..BASE_DIMS {
            out[t][d] = seq[t][d] - seq[t - 1][d];
        }
    }
    out
}

/// `delta[t] = seq[t] - seq[t - 1]`, with `delta[0] = 0`.
pub fn compute_deltas(seq: &[[f64; BASE_DIMS]]) -> Result<Vec<[f64; BASE_DIMS]>> {
    if seq.len() < 2 {
        return Err(Error::TooShort(format!("deltas need at least 2 frames, got {}", seq.len())));
    }
    Ok(backward_difference(seq))
}

/// One feature frame per 1/15 s, each window centred on its video frame.
///
/// Samples outside the signal read as zero. Signals shorter than one
/// analysis window are rejected.
pub fn extract_features(signal: &AudioSignal, config: &MfccConfig) -> Result<AudioFeatureSequence> {
    if signal.sample_rate() != config.sample_rate {
        return Err(Error::Config(format!(
            "signal is {} Hz, configuration expects {} Hz",
            signal.sample_rate(),
            config.sample_rate
        )));
    }
    let extractor = MfccExtractor::new(config.clone())?;
    let win = config.window_len();
    let samples = signal.samples();
    if samples.len() < win {
        return Err(Error::TooShort(format!("signal has {} samples, one analysis window needs {win}", samples.len())));
    }
    let sr = signal.sample_rate() as f64;
    let n_frames = ((samples.len() as f64 * FRAME_RATE / sr).floor() as usize).max(1);
    let mut base = Vec::with_capacity(n_frames);
    let mut window = vec![0.0; win];
    for j in 0..n_frames {
        let centre = ((j as f64 + 0.5) * sr / FRAME_RATE).round() as isize;
        let start = centre - (win / 2) as isize;
        for (i, w) in window.iter_mut().enumerate() {
            let idx = start + i as isize;
            *w = if idx >= 0 && (idx as usize) < samples.len() { samples[idx as usize] } else { 0.0 };
        }
        let (mfcc, log_energy) = extractor.compute_frame(&window)?;
        let mut b = [0.0; BASE_DIMS];
        b[..NUM_CEPSTRA].copy_from_slice(&mfcc);
        b[NUM_CEPSTRA] = log_energy;
        base.push(b);
    }
    let deltas = backward_difference(&base);
    let frames = base.iter().zip(&deltas).map(|(b, d)| FeatureFrame::from_parts(b, d)).collect();
    AudioFeatureSequence::new(frames)
}
